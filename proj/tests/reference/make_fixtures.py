# Copyright 2026 The catchdec Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the frozen fixtures under tests/data.

    python3 tests/reference/make_fixtures.py

Outputs are committed; the C++ tests never run this script.
"""

import json
import pathlib
import random

import catch_reference as ref

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def fmt(x):
    return repr(float(x))


def write_golden(stem, tokens, traces):
    (DATA / f"{stem}.golden.tokens").write_text(" ".join(map(str, tokens)) + "\n")
    with open(DATA / f"{stem}.golden.trace.jsonl", "w") as out:
        for t in traces:
            out.write(json.dumps(t) + "\n")


# S1: five content tokens then the stop token, covering both channels and
# both branches. Searched from a fixed seed, logits rounded to 2 decimals.
def make_s1():
    vocab = ["<s>", "a", "cat", "sits", "on", "mat", "dog", "</s>"]
    stop = vocab.index("</s>")
    rng = random.Random(20260311)
    for _attempt in range(100000):
        steps = []
        for s in range(6):
            row = {}
            for c in ref.CHANNELS:
                row[c] = [round(rng.uniform(-3, 3), 2) for _ in vocab]
            steps.append(row)
        sc = {"vocab": vocab, "stop": stop, "prompt": [0], "steps": steps}
        tokens, traces = ref.decode_scripted(sc)
        if len(tokens) != 6 or tokens[-1] != stop or stop in tokens[:-1]:
            continue
        kinds = {(t["chosen_channel"], t["branch"]) for t in traces}
        if len(kinds) == 4:
            break
    else:
        raise SystemExit("no S1 candidate found")

    lines = [
        "# S1: six scripted steps; the stop token is emitted at the last one.",
        "format scripted",
        "vocab " + " ".join(vocab),
        "steps 6",
        "stop </s>",
        "prompt <s>",
    ]
    for s, row in enumerate(steps):
        for c in ref.CHANNELS:
            lines.append(f"{s} {c} " + " ".join(f"{x:g}" for x in row[c]))
    (DATA / "s1.scripted").write_text("\n".join(lines) + "\n")
    sc = ref.parse_scripted((DATA / "s1.scripted").read_text())
    write_golden("s1", *ref.decode_scripted(sc))


def make_sandwich():
    sc = ref.parse_toy((DATA / "sandwich.toy").read_text(), lambda p: (DATA / p).read_text())
    write_golden("sandwich", *ref.decode_toy(sc))


# Onset fixture: 140 steps. d_orig_non drops below 0.01 for good at step 39
# (1-based) with isolated earlier dips; d_dec_non stays above until step 101
# apart from a two-step dip at 70-71. Every row respects the trace invariants.
def make_onset():
    rng = random.Random(39101)
    rows = []
    for t in range(1, 141):
        if t >= 39:
            orig = round(rng.uniform(0.0005, 0.009), 6)
        elif t in (12, 25, 26):
            orig = 0.006
        else:
            orig = round(rng.uniform(0.03, 0.3), 6)
        if t >= 101:
            dec = round(rng.uniform(0.0005, 0.009), 6)
        elif t in (70, 71):
            dec = 0.004
        else:
            dec = round(rng.uniform(0.02, 0.25), 6)
        other = round(dec * rng.uniform(0.2, 0.95), 6)
        dual_first = t % 2 == 0
        rows.append(
            {
                "step": t - 1,
                "d_dual_non": dec if dual_first else other,
                "d_res_non": other if dual_first else dec,
                "d_dec_non": dec,
                "d_orig_non": orig,
                "chosen_channel": "dual" if dual_first else "residual",
                "branch": "subtract" if dec >= orig else "enhance",
                "token": rng.randrange(0, 50),
            }
        )
    with open(DATA / "onset-39-101.trace.jsonl", "w") as out:
        for r in rows:
            out.write(json.dumps(r) + "\n")


if __name__ == "__main__":
    make_s1()
    make_sandwich()
    make_onset()
