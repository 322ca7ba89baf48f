"""In-process broadcast-round simulator.

One synchronous, error-free round: keys are dealt, every user encodes and
broadcasts, every user decodes the others' sum and adds its own input. Users
run sequentially for determinism; encoding is pure, so identical parameters,
precoder, seed, and input source always produce a byte-identical transcript.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .scheme import (
    ConstructionFailedError,
    Precoder,
    SchemeParams,
    build_precoder,
    capacity,
    encode,
    recover,
    sample_keys,
)

TRANSCRIPT_MAGIC = "DSAT1"


@dataclass(frozen=True)
class Transcript:
    """Everything one round produced, in broadcast order."""

    params: SchemeParams
    seed: int
    inputs: np.ndarray     # K x L
    messages: np.ndarray   # K x L
    recovered: np.ndarray  # K x L global-sum claims
    verdict: bool

    def to_text(self) -> str:
        p = self.params
        lines = [f"{TRANSCRIPT_MAGIC} {p.K} {p.T} {p.G} {p.q} {p.m} {self.seed}"]
        for tag, table in (("W", self.inputs), ("X", self.messages), ("R", self.recovered)):
            for k in p.users:
                row = " ".join(str(int(v)) for v in table[k - 1])
                lines.append(f"{tag} {k} {row}")
        lines.append(f"VERDICT {'pass' if self.verdict else 'fail'}")
        return "\n".join(lines) + "\n"


def make_inputs(params: SchemeParams, source, seed) -> np.ndarray:
    """Materialize the K x L input table from a source selector.

    ``source`` is "random" (seeded uniform), "zero", or an explicit
    array-like; the scheme must work for any of them, so nothing here
    assumes uniformity.
    """
    if isinstance(source, str):
        if source == "zero":
            return np.zeros((params.K, params.L), dtype=np.int64)
        if source == "random":
            rng = np.random.Generator(np.random.PCG64(seed))
            return rng.integers(0, params.q, size=(params.K, params.L), dtype=np.int64)
        raise ValueError(f"unknown input source {source!r}")
    arr = params.field.reduce(source)
    if arr.shape != (params.K, params.L):
        raise ValueError(f"inputs must be {params.K} x {params.L}, got {arr.shape}")
    return arr


def run_round(params: SchemeParams, precoder: Precoder,
              input_source="random", seed: int = 0) -> Transcript:
    """Deal keys, broadcast every message, and decode at every user.

    Key and input randomness are derived from disjoint children of the seed,
    so transcripts are reproducible and keys never correlate with inputs.
    """
    if precoder.params != params:
        raise ValueError("precoder was built for different parameters")
    key_ss, input_ss = np.random.SeedSequence(seed).spawn(2)
    keys = sample_keys(params, key_ss)
    inputs = make_inputs(params, input_source, input_ss)

    sent = {k: encode(params, precoder, keys, inputs[k - 1], k) for k in params.users}
    messages = np.vstack([sent[k].payload for k in params.users])

    recovered = np.zeros_like(inputs)
    for k in params.users:
        others_sum = recover(params, precoder, keys, k,
                             [sent[u] for u in params.users if u != k])
        recovered[k - 1] = (others_sum + inputs[k - 1]) % params.q

    truth = inputs.sum(axis=0) % params.q
    verdict = all(np.array_equal(recovered[k - 1], truth) for k in params.users)
    return Transcript(params, seed, inputs, messages, recovered, verdict)


# -- batch harness ----------------------------------------------------------


@dataclass(frozen=True)
class GridCell:
    """Outcome of one (K, T, G) cell of a parameter sweep."""

    K: int
    T: int
    G: int
    feasible: bool
    reason: str | None
    built: bool
    audit_ok: bool
    verdict: bool
    r_s_achieved: Fraction | None
    r_s_star: Fraction | None
    error: str | None = None


def run_grid(K_range, T_range, G_range, q: int, m: int = 1, seed: int = 0,
             max_retries: int = 16) -> list[GridCell]:
    """Sweep the parameter grid: capacity, then build + audit + simulate on
    every feasible cell. Per-cell failures are recorded, never raised."""
    from .auditor import audit  # deferred: auditor imports scheme

    cells: list[GridCell] = []
    for K in K_range:
        for T in T_range:
            if not 0 <= T <= K - 3:
                continue
            for G in G_range:
                if not 1 <= G <= K:
                    continue
                region = capacity(K, T, G)
                if not region.feasible:
                    cells.append(GridCell(K, T, G, False,
                                          region.infeasibility_reason.value,
                                          False, False, False, None, None))
                    continue
                params = SchemeParams(K=K, T=T, G=G, q=q, m=m)
                try:
                    precoder = build_precoder(params, seed=seed, max_retries=max_retries)
                    report = audit(precoder, seed=seed)
                    transcript = run_round(params, precoder, "random", seed)
                    cells.append(GridCell(
                        K, T, G, True, None, True, report.all_ok, transcript.verdict,
                        Fraction(precoder.L_S, precoder.L), region.r_s_star))
                except ConstructionFailedError as exc:
                    cells.append(GridCell(K, T, G, True, None, False, False, False,
                                          None, region.r_s_star, error=str(exc)))
    return cells
