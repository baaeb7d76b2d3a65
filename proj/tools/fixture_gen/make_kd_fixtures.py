"""Writes the kd CLI fixtures and their independently recomputed losses."""
import json
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[2] / "data" / "fixtures"
C, K, M, LAM = 20, 5, 8, 10.0


def softmax(z):
    e = np.exp(z - z.max())
    return e / e.sum()


def topk(v, k):
    return sorted(range(len(v)), key=lambda i: (-v[i], i))[:k]


def losses(idx, p, z):
    q = softmax(z)
    fkl = float(sum(pi * np.log(pi / q[i]) for i, pi in zip(idx, p)))
    rkl = float(sum(q[i] * np.log(q[i] / pi) for i, pi in zip(idx, p)))
    tail = float(sum(q[j] for j in topk(q, M) if j not in set(idx)))
    return {"fkl": fkl, "tail": tail, "ckd": fkl + LAM * tail, "rkl": rkl, "rkl-stab": rkl + LAM * tail}


def write(name, rows):
    with open(OUT / name, "w") as f:
        f.write(json.dumps({"format": "star-kd", "version": 1, "vocab_size": C}) + "\n")
        for r in rows:
            f.write(json.dumps(r) + "\n")


rng = np.random.default_rng(2024)
random_rows, expected = [], {k: [] for k in ["fkl", "tail", "ckd", "rkl", "rkl-stab"]}
for n in range(6):
    p_full = softmax(rng.normal(0, 2, C))
    idx = topk(p_full, K)
    probs = [float(p_full[i]) for i in idx]
    z = [float(v) for v in rng.normal(0, 1.5, C)]
    random_rows.append({"position_id": f"pos{n}", "teacher_indices": idx, "teacher_probs": probs, "student_logits": z})
    for k, v in losses(idx, probs, np.array(z)).items():
        expected[k].append(v)
write("kd_random.jsonl", random_rows)
json.dump({"k": K, "m": M, "lambda": LAM, "losses": expected}, open(OUT / "kd_random.expected.json", "w"), indent=1)

same_rows = []
for n in range(4):
    z = rng.normal(0, 1.5, C)
    q = softmax(z)
    idx = topk(q, K)
    same_rows.append({"position_id": n, "teacher_indices": idx, "teacher_probs": [float(q[i]) for i in idx],
                      "student_logits": [float(v) for v in z]})
write("kd_teacher_equals_student.jsonl", same_rows)

# Adversarial family for the KD dynamics demo: one long-tailed profile with
# 2% of the mass outside the top-k, placed at random indices.
rng = np.random.default_rng(1)
profile = np.array([0.55, 0.2, 0.1, 0.06, 0.04, 0.02, 1e-3, 1e-4])
profile = profile * (0.98 / profile.sum())
teachers = []
for n in range(8):
    idx = [int(i) for i in rng.choice(64, 8, replace=False)]
    teachers.append({"indices": idx, "probs": [float(round(p, 12)) for p in profile]})
with open(OUT.parent / "kd_adversarial.json", "w") as f:
    json.dump({"vocab_size": 64, "teachers": teachers}, f, indent=1)
