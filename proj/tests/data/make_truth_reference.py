# Copyright 2026 The dmfgp Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates truth_reference.csv: benchmark truth functions evaluated
independently of the C++ code at 1000 random points each."""

import math
import random


def step(x, high):
    left = x <= 1.0
    if high:
        return -1.0 if left else 2.0
    return 0.0 if left else 1.0


def forrester(x, high):
    base = 0.5 * (6 * x - 2) ** 2 * math.sin(12 * x - 4) + 10 * (x - 0.5) - 5
    low = base if x <= 0.5 else base + 3
    if not high:
        return low
    value = 2 * low - 20 * x + 20
    return value if x <= 0.5 else value + 4


def main():
    rng = random.Random(20160325)
    rows = []
    for _ in range(1000):
        x = rng.uniform(0.0, 2.0)
        rows.append(("step", x, step(x, False), step(x, True)))
    for _ in range(1000):
        x = rng.uniform(0.0, 1.0)
        rows.append(("forrester", x, forrester(x, False), forrester(x, True)))
    with open("truth_reference.csv", "w", newline="\n") as out:
        out.write("kind,x,low,high\n")
        for kind, x, low, high in rows:
            out.write(f"{kind},{x!r},{low!r},{high!r}\n")


if __name__ == "__main__":
    main()
