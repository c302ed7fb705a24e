"""Smoke test for the roleprobe extension module.

Build and install first:  pip install --no-build-isolation crates/python
"""

import json
import math
import os
import tempfile

import roleprobe


def main():
    manifest = roleprobe.generate_stimuli(2, 50)
    assert len(manifest.splitlines()) == 1200

    with tempfile.TemporaryDirectory() as tmp:
        stim = os.path.join(tmp, "exp2.jsonl")
        with open(stim, "w") as f:
            f.write(roleprobe.generate_stimuli(2, 3))
        store = os.path.join(tmp, "store")
        roleprobe.write_synthetic_store(stim, store, "structure-onehot", 2, 12)

        report = json.loads(roleprobe.validate_store(store, stim))
        assert report["issues"] == [], report

        sim = json.loads(roleprobe.rsa_exp2(stim, store, [1, 2]))
        for layer in sim["layers"]:
            for bucket in layer["buckets"]:
                assert abs(bucket["mean_same"] - bucket["mean_opposite"]) < 1e-9

        roleprobe.write_synthetic_store(stim, store, "role-encoding", 2, 4, seed=3)
        result = json.loads(roleprobe.probe(stim, store, 2, bootstrap_b=200))
        assert len(result["folds"]) == 66
        assert all(acc <= 0.75 for acc in result["fold_accuracies"])

        try:
            roleprobe.probe(stim, store, 9)
        except ValueError as e:
            assert "layer" in str(e)
        else:
            raise AssertionError("out-of-range layer accepted")

    z, p = roleprobe.wilcoxon_signed_rank([1.0, 2.0, 3.0, 4.0, 5.0])
    assert z > 0 and abs(p - 0.0625) < 1e-12
    assert abs(roleprobe.fisher_z(0.5) - math.atanh(0.5)) < 1e-12
    print("roleprobe", roleprobe.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
