#!/usr/bin/env python3
"""Regenerates fixtures/synthetic/ (instances, method records, canned backend
responses, config). The numbers are chosen so the aggregate metrics come out
to round values that the test suite asserts exactly."""

import json
import math
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "synthetic"

# per-group scores: (p_pos original, p_pos counterfactual, edit, extra variant suffix tokens)
GROUPS = {
    0: {"p_orig": 0.10, "p_cf": 0.90, "cf": "film {i} is good", "extra": "indeed"},
    1: {"p_orig": 0.20, "p_cf": 0.90, "cf": "film {i} is very good", "extra": "indeed truly"},
    2: {"p_orig": 0.05, "p_cf": 0.95, "cf": "film {i} is good", "extra": "indeed"},
    3: {"p_orig": 0.30, "p_cf": 0.20, "cf": "film {i} is not bad", "extra": "indeed"},
}

LN2 = -math.log(2.0)
LN3 = -math.log(3.0)


def main():
    ROOT.mkdir(parents=True, exist_ok=True)

    instances = []
    alpha = []
    beta = []
    classify = {}
    logprobs = {}

    for i in range(1, 21):
        iid = f"s{i:02d}"
        tag = f"{i:02d}"
        group = GROUPS[i % 4]
        orig = f"film {tag} is bad"
        cf0 = group["cf"].format(i=tag)
        cf1 = cf0 + " " + group["extra"]

        instances.append({
            "id": iid, "task": "sentiment", "text": orig,
            "label": "negative", "target_label": "positive",
        })
        alpha.append({"instance_id": iid, "method_id": "alpha",
                      "variant_index": 0, "text": cf0})
        alpha.append({"instance_id": iid, "method_id": "alpha",
                      "variant_index": 1, "text": cf1})

        classify[orig] = {"negative": round(1 - group["p_orig"], 10),
                          "positive": group["p_orig"]}
        classify[cf0] = {"negative": round(1 - group["p_cf"], 10),
                         "positive": group["p_cf"]}
        logprobs[cf0] = {"tokens": cf0.split(), "logprobs": [LN2] * len(cf0.split())}

        if i <= 16:
            cfb = f"film {tag} is fine"
            beta.append({"instance_id": iid, "method_id": "beta",
                         "variant_index": 0, "text": cfb})
            classify[cfb] = {"negative": 0.2, "positive": 0.8}
            logprobs[cfb] = {"tokens": cfb.split(), "logprobs": [LN3] * len(cfb.split())}

    def write_jsonl(name, rows):
        with open(ROOT / name, "w") as f:
            for row in rows:
                f.write(json.dumps(row) + "\n")

    write_jsonl("instances.jsonl", instances)
    write_jsonl("records_alpha.jsonl", alpha)
    write_jsonl("records_beta.jsonl", beta)

    backend = {
        "classify": classify,
        "logprobs": logprobs,
        "chat": {
            "rules": [
                {"contains": "very good", "content": "Score: 5"},
                {"contains": "not bad", "content": "Score: 2"},
            ],
            "default": "Score: 4",
        },
    }
    with open(ROOT / "backend_fixture.json", "w") as f:
        json.dump(backend, f, indent=2, sort_keys=True)
        f.write("\n")

    config = {
        "task": "sentiment",
        "instances_path": "instances.jsonl",
        "method_records": {
            "alpha": "records_alpha.jsonl",
            "beta": "records_beta.jsonl",
        },
        "backends": {
            "classify": {"endpoint": "fixture://backend_fixture.json", "model_id": "clf-fixture"},
            "logprob": {"endpoint": "fixture://backend_fixture.json", "model_id": "lm-fixture"},
            "chat_judge": {"endpoint": "fixture://backend_fixture.json", "model_id": "judge-fixture"},
        },
        "judge_temperatures": [0.2],
        "output_dir": "out",
        "seed": 42,
    }
    with open(ROOT / "config.json", "w") as f:
        json.dump(config, f, indent=2)
        f.write("\n")

    print(f"wrote fixtures to {ROOT}")


if __name__ == "__main__":
    main()
