"""Compare engine posteriors with the flat oracle on random Markov models.

    python3 scripts/differential_sweep.py --models 100 --seed 0
"""

import argparse
import time
from dataclasses import dataclass

import numpy as np

from capax.engine import enter_evidence, propagate, query_posterior
from capax.errors import ContradictionError
from capax.events import Event, extend
from capax.oracle import assemble_joint, flat_posterior, random_markov_model


def random_local_event(rng, tree, nonempty=True):
    node = tree.nodes[int(rng.integers(len(tree.nodes)))]
    while len(node) == 0:
        node = tree.nodes[int(rng.integers(len(tree.nodes)))]
    k = int(rng.integers(1, len(node) + 1))
    sub = type(node)(tuple(rng.choice(node.variables, size=k, replace=False)))
    lo = 1 if nonempty else 0
    return Event(sub, int(rng.integers(lo, sub.full_mask + 1)))


@dataclass
class SweepConfig:
    models: int = 100
    seed: int = 0
    max_findings: int = 3


def sweep(cfg: SweepConfig):
    rng = np.random.default_rng(cfg.seed)
    worst, checked, contradictions, vacuous = 0.0, 0, 0, 0
    for _ in range(cfg.models):
        model = random_markov_model(rng)
        joint = assemble_joint(model)
        findings = [random_local_event(rng, model.m_tree) for _ in range(int(rng.integers(0, cfg.max_findings + 1)))]
        ev_mask = model.scope.full_mask
        for f in findings:
            ev_mask &= extend(f, model.scope).mask
        work = model.copy()
        for f in findings:
            enter_evidence(work, f)
        try:
            propagate(work)
        except ContradictionError:
            contradictions += 1
            continue
        vacuous += work.vacuous
        e = Event(model.scope, ev_mask)
        for node in work.m_tree.nodes:
            if len(node) == 0:
                continue
            for mask in range(1 << node.size):
                t = Event(node, mask)
                got = query_posterior(work, t)
                ref = flat_posterior(joint, extend(t, model.scope), e)
                if got.status != ref.status:
                    raise AssertionError(f"status mismatch on {t!r}: {got} vs {ref}")
                worst = max(worst, abs(got.lower - ref.lower), abs(got.upper - ref.upper))
                checked += 1
    return worst, checked, contradictions, vacuous


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models", type=int, default=SweepConfig.models)
    ap.add_argument("--seed", type=int, default=SweepConfig.seed)
    ap.add_argument("--max-findings", type=int, default=SweepConfig.max_findings)
    args = ap.parse_args()
    cfg = SweepConfig(args.models, args.seed, args.max_findings)
    t0 = time.perf_counter()
    worst, checked, contra, vac = sweep(cfg)
    print(
        f"{checked} posteriors on {cfg.models} models, max deviation {worst:.2e}, "
        f"{contra} contradictions, {vac} vacuous, {time.perf_counter() - t0:.1f}s"
    )


if __name__ == "__main__":
    main()
