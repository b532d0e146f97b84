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

"""Plain-Python reference decoder used to freeze golden fixtures.

Deliberately naive: lists and math.log only, no shared code with the C++
library. Only greedy decoding is modelled.
"""

import math

CHANNELS = ("original", "dual", "residual", "non_visual")


def softmax(z):
    m = max(z)
    e = [math.exp(x - m) for x in z]
    s = sum(e)
    return [x / s for x in e]


def kl(p, q):
    total = 0.0
    for a, b in zip(p, q):
        if a > 0:
            total += a * math.log(a / b)
    return total


def jsd(p, q):
    m = [(a + b) / 2 for a, b in zip(p, q)]
    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def argmax(v):
    best = 0
    for i, x in enumerate(v):
        if x > v[best]:
            best = i
    return best


def step(ch, alpha=1.2, beta=3.0, baseline=False):
    p = {c: softmax(ch[c]) for c in CHANNELS}
    d_dual = jsd(p["dual"], p["non_visual"])
    d_res = jsd(p["residual"], p["non_visual"])
    chosen = "dual" if d_dual >= d_res else "residual"
    z = ch[chosen]
    v = ch["original"]
    d_dec = d_dual if chosen == "dual" else d_res
    d_orig = jsd(p["original"], p["non_visual"])
    if d_dec >= d_orig:
        branch = "subtract"
        combined = [alpha * a - b for a, b in zip(z, v)]
    else:
        branch = "enhance"
        combined = [beta * b + a for a, b in zip(z, v)]
    token = argmax(p["original"] if baseline else softmax(combined))
    return {
        "d_dual_non": d_dual,
        "d_res_non": d_res,
        "d_dec_non": d_dec,
        "d_orig_non": d_orig,
        "chosen_channel": chosen,
        "branch": branch,
        "token": token,
    }


def decode(step_logits, stop=None, max_tokens=64, **kw):
    tokens, traces = [], []
    for t in range(max_tokens):
        ch = step_logits(tokens)
        if ch is None:
            break
        tr = step(ch, **kw)
        tr = {"step": t, **tr}
        tokens.append(tr["token"])
        traces.append(tr)
        if stop is not None and tr["token"] == stop:
            break
    return tokens, traces


# -- scripted scenarios ------------------------------------------------------


def parse_scripted(text):
    sc = {"stop": None, "prompt": [], "steps": []}
    for line in text.splitlines():
        f = line.split()
        if not f or f[0].startswith("#"):
            continue
        if f[0] == "format":
            continue
        if f[0] == "vocab":
            sc["vocab"] = f[1:]
        elif f[0] == "steps":
            sc["steps"] = [dict() for _ in range(int(f[1]))]
        elif f[0] == "stop":
            sc["stop"] = sc["vocab"].index(f[1])
        elif f[0] == "prompt":
            sc["prompt"] = [sc["vocab"].index(t) for t in f[1:]]
        else:
            sc["steps"][int(f[0])][f[1]] = [float(x) for x in f[2:]]
    return sc


def decode_scripted(sc, **kw):
    steps = sc["steps"]

    def logits(prefix):
        return steps[len(prefix)] if len(prefix) < len(steps) else None

    return decode(logits, stop=sc["stop"], **kw)


# -- grounded toy ------------------------------------------------------------


def parse_seg(text):
    masks = []
    for line in text.splitlines():
        f = line.split()
        if not f or f[0].startswith("#") or len(f) == 2:
            continue
        masks.append((f[0], f[1], int(f[2])))
    return masks


def decouple(masks, fraction):
    objs = [(name, area) for name, kind, area in masks if kind == "object"]
    n = len(objs)
    m = min(n, max(1, math.floor(fraction * n + 0.5)))
    ranked = sorted(objs, key=lambda o: (-o[1], o[0]))
    dual = {name for name, _ in ranked[:m]}
    return dual, {name for name, _ in objs} - dual


def parse_row(fields, vocab):
    if "=" not in fields[0]:
        return [float(x) for x in fields]
    default = 0.0
    vals = {}
    for f in fields:
        k, v = f.split("=")
        if k == "*":
            default = float(v)
        else:
            vals[k] = float(v)
    return [vals.get(t, default) for t in vocab]


def parse_toy(text, read_seg):
    sc = {"bigram": {}, "evidence": {}, "stop": None}
    for line in text.splitlines():
        f = line.split()
        if not f or f[0].startswith("#"):
            continue
        k = f[0]
        if k == "vocab":
            sc["vocab"] = f[1:]
        elif k == "lambda":
            sc["lang"], sc["vis"] = float(f[1]), float(f[2])
        elif k == "prompt":
            sc["prompt"] = f[1:]
        elif k == "planted":
            sc["truth"], sc["halluc"] = f[1], f[2]
        elif k == "stop":
            sc["stop"] = sc["vocab"].index(f[1])
        elif k == "bigram":
            sc["bigram"][f[1]] = parse_row(f[2:], sc["vocab"])
        elif k == "evidence":
            sc["evidence"][f[1]] = parse_row(f[2:], sc["vocab"])
        elif k == "segmentation":
            sc["seg"] = parse_seg(read_seg(f[1]))
    return sc


def toy_logits(sc, prefix, visible):
    vocab = sc["vocab"]
    prev = (sc["prompt"] + [vocab[t] for t in prefix])[-1]
    row = sc["bigram"].get(prev, [0.0] * len(vocab))
    out = []
    for i in range(len(vocab)):
        ev = sum(sc["evidence"][o][i] for o in visible)
        out.append(sc["lang"] * row[i] + sc["vis"] * ev)
    return out


def decode_toy(sc, fraction=0.05, **kw):
    dual, residual = decouple(sc["seg"], fraction)
    everything = set(sc["evidence"])

    def logits(prefix):
        return {
            "original": toy_logits(sc, prefix, everything),
            "dual": toy_logits(sc, prefix, dual & everything),
            "residual": toy_logits(sc, prefix, residual & everything),
            "non_visual": toy_logits(sc, prefix, set()),
        }

    return decode(logits, stop=sc["stop"], **kw)
