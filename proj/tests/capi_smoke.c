/*
 * Copyright 2026 The Robust Portfolio Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <rp/rp.h>
#include <stdio.h>

#define EXPECT(cond)                                          \
  do {                                                        \
    if (!(cond)) {                                            \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
      return 1;                                               \
    }                                                         \
  } while (0)

int main(void) {
  const uint32_t ranking[] = {0, 1, 2, 3};
  const double probs[] = {0.4, 0.3, 0.2, 0.1};
  rp_portfolio* p = NULL;
  uint32_t members[4];

  EXPECT(rp_portfolio_build(ranking, probs, 4, 0.25, &p) == RP_OK);
  EXPECT(rp_portfolio_size(p) == 3);
  EXPECT(rp_portfolio_members(p, members, 4) == RP_OK);
  EXPECT(members[0] == 0 && members[1] == 1 && members[2] == 2);
  rp_portfolio_free(p);

  p = NULL;
  EXPECT(rp_portfolio_build(ranking, probs, 4, 0.0, &p) == RP_ERR_INVALID_ALPHA);
  EXPECT(p == NULL);
  EXPECT(rp_last_error()[0] != '\0');
  printf("%s: %s\n", rp_status_string(RP_ERR_INVALID_ALPHA), rp_last_error());
  return 0;
}
