import csv
import re

import pytest

from attnplaus.corpus import SentencePair, tokenize

ESNLI_HEADER = ["pairID", "gold_label", "Sentence1", "Sentence2",
                "Sentence1_Highlighted_1", "Sentence2_Highlighted_1"]

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")


@pytest.fixture
def write_csv(tmp_path):
    """Write rows (dicts or lists) under a header and return the path."""
    def _write(rows, header=ESNLI_HEADER, name="corpus.csv"):
        path = tmp_path / name
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([row.get(h, "") for h in header] if isinstance(row, dict) else row)
        return path
    return _write


def make_pair(pid, premise, hypothesis, label="entailment", phl=None, hhl=None):
    p, h = tokenize(premise), tokenize(hypothesis)
    return SentencePair(pid, tuple(p), tuple(h), label,
                        tuple(phl or [0] * len(p)), tuple(hhl or [0] * len(h)))



def gradient_check(params, batch, n_coords=64, step=1e-4, seed=0):
    """Worst relative error per tensor between analytic and central-difference gradients.

    Relative error is |a - fd| / max(|a|, |fd|, 1e-6); the floor keeps
    coordinates whose true gradient is ~0 from dividing rounding noise by zero.
    A coordinate whose +-step perturbation flips any ReLU is redrawn, since
    the difference quotient straddles a kink there.  Returns
    ``(worst, redrawn)``.
    """
    import numpy as np
    from attnplaus.neuralmodel import TENSOR_NAMES, loss_and_gradients
    from attnplaus.neuralmodel.network import _forward

    def evaluate():
        probs, cache = _forward(params, batch)
        picked = probs[np.arange(len(batch)), batch.labels]
        return float(-np.mean(np.log(picked))), cache["a1"] > 0

    _, grads = loss_and_gradients(params, batch)
    _, pattern = evaluate()
    rng = np.random.default_rng(seed)
    worst, redrawn = {}, 0
    for name in TENSOR_NAMES:
        arr = params.tensors[name]
        errs = []
        while len(errs) < n_coords:
            idx = tuple(int(rng.integers(s)) for s in arr.shape)
            old = arr[idx]
            arr[idx] = old + step
            up, pat_up = evaluate()
            arr[idx] = old - step
            down, pat_down = evaluate()
            arr[idx] = old
            if not (np.array_equal(pat_up, pattern) and np.array_equal(pat_down, pattern)):
                redrawn += 1
                continue
            fd = (up - down) / (2 * step)
            a = grads[name][idx]
            errs.append(abs(a - fd) / max(abs(a), abs(fd), 1e-6))
        worst[name] = max(errs)
    return worst, redrawn
