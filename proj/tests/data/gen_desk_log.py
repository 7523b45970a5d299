#!/usr/bin/env python3
# Copyright 2026 The mallsim Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the synthetic desk-scale SWF log used by the desk scenarios.

Two weeks of activity on a 20-core-per-node machine, two queues (1 = batch,
2 = visualization). Output is fully determined by --seed.
"""

import argparse
import math
import random

START = 1467324000  # 2016-07-01 00:00 at UTC+2
TZ = 7200
DAYS = 14
CPN = 20


def user_profiles(rng, n_users):
    users = []
    for u in range(1, n_users + 1):
        rate = rng.lognormvariate(math.log(6.0), 0.8)
        # Mostly single-node jobs; a few users run rare 3-4 node jobs.
        sizes = rng.choice([[1], [1], [1, 1, 2], [1, 1, 1, 3], [1, 1, 1, 1, 4], [1, 2]])
        median_run = rng.choice([600, 1800, 3600, 7200, 14400])
        users.append({"id": u, "rate": rate, "sizes": sizes, "median_run": median_run})
    # One user whose largest job needs the whole desk cluster; sampling must skip it.
    users.append({"id": n_users + 1, "rate": 3.0, "sizes": [2, 16], "median_run": 3600})
    return users


def generate(seed, n_users):
    rng = random.Random(seed)
    jobs = []
    for user in user_profiles(rng, n_users):
        for day in range(DAYS):
            weekday = (4 + day) % 7  # July 1st 2016 was a Friday
            rate = user["rate"] * (0.25 if weekday >= 5 else 1.0)
            for _ in range(poisson(rng, rate)):
                hour = rng.triangular(7.0, 22.0, 11.0)
                submit = day * 86400 + int(hour * 3600) + rng.randrange(3600)
                nodes = rng.choice(user["sizes"])
                procs = nodes * CPN - (rng.randrange(CPN) if nodes == 1 else 0)
                run = int(min(86400, max(30, rng.lognormvariate(math.log(user["median_run"]), 1.0))))
                queue = 2 if rng.random() < 0.08 else 1
                status = 5 if rng.random() < 0.03 else 1
                jobs.append([submit, run, procs, user["id"], queue, status])
    jobs.sort(key=lambda j: (j[0], j[3]))
    return jobs


def poisson(rng, lam):
    # Knuth; rates here are small.
    limit, k, p = math.exp(-lam), 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def write(path, jobs, seed):
    with open(path, "w") as out:
        out.write("; Version: 2.2\n")
        out.write("; Computer: synthetic desk cluster\n")
        out.write(f"; Note: generated by gen_desk_log.py --seed {seed}\n")
        out.write(f"; UnixStartTime: {START}\n")
        out.write(f"; TimeZone: {TZ}\n")
        out.write(f"; MaxNodes: 64\n")
        out.write(f"; MaxProcs: {64 * CPN}\n")
        out.write("; Queues: 1 2\n")
        out.write("; Queue: 1 batch\n")
        out.write("; Queue: 2 visualization\n")
        for i, (submit, run, procs, user, queue, status) in enumerate(jobs, start=1):
            req_time = run * 2
            fields = [i, submit, -1, run, procs, -1, -1, procs, req_time, -1, status, user, user, -1, queue, 1, -1, -1]
            out.write(" ".join(str(f) for f in fields) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=2016)
    ap.add_argument("--users", type=int, default=30)
    ap.add_argument("--out", default="desk.swf")
    args = ap.parse_args()
    write(args.out, generate(args.seed, args.users), args.seed)


if __name__ == "__main__":
    main()
