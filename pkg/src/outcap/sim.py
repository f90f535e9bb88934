"""Monte Carlo mean outage capacity over Ricean block fading.

Every sample block draws its random numbers from a Philox stream keyed by
``(seed, block index)``.  All cells of a sweep share these streams, so
scenarios and SNR points are compared on common random numbers and the
output does not depend on how cells are scheduled across workers.
"""

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np

from ._validation import check_gamma
from .feedback import LloydMaxQuantizer
from .power import WaterFilling
from .ricean import (
    RiceanChannel,
    TrainingConfig,
    ml_estimate,
    percentile_table,
    posterior_of,
    sample_state,
)

__all__ = [
    "Scenario",
    "SweepRow",
    "SweepResult",
    "sample_rng",
    "draw_effective_amplitudes",
    "run_point",
    "run_sweep",
    "snr_for_rate",
    "parse_label",
]

BLOCK_SIZE = 8192
CSIT_MODES = ("none", "unlimited", "rfb")


@dataclass(frozen=True)
class Scenario:
    """One curve of a sweep.

    csir is "perfect" or "estimated" (then `n_train` >= 1); csit is "none",
    "unlimited" or "rfb" (then `feedback_bits` >= 1).  `p_train` of None
    means training power equals the average data power.
    """

    csir: str = "perfect"
    csit: str = "none"
    gamma: float = 0.01
    rice_factor_db: float = 0.0
    snr_db: float = 0.0
    n_train: Optional[int] = None
    feedback_bits: Optional[int] = None
    p_train: Optional[float] = None

    def __post_init__(self):
        check_gamma(self.gamma, closed_low=False)
        if self.csir == "estimated":
            if self.n_train is None or int(self.n_train) < 1:
                raise ValueError("estimated CSIR needs n_train >= 1")
        elif self.csir != "perfect":
            raise ValueError(f"unknown csir {self.csir!r}")
        if self.csit not in CSIT_MODES:
            raise ValueError(f"unknown csit {self.csit!r}")
        if self.csit == "rfb" and (self.feedback_bits is None or int(self.feedback_bits) < 1):
            raise ValueError("rate-limited feedback needs feedback_bits >= 1")
        if self.p_train is not None and not self.p_train > 0:
            raise ValueError("p_train must be positive")

    @property
    def label(self):
        csir = "perfect" if self.csir == "perfect" else f"estimated(N={self.n_train})"
        csit = f"rfb({self.feedback_bits})" if self.csit == "rfb" else self.csit
        return f"{csir}/{csit}"

    @property
    def tx_power(self):
        """Average data power P, with |mu_h|^2 = noise_var = 1."""
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def channel(self):
        return RiceanChannel.from_rice_factor_db(self.rice_factor_db, mu_h=1.0, noise_var=1.0)

    @property
    def training(self):
        if self.csir != "estimated":
            return None
        p_train = self.tx_power if self.p_train is None else self.p_train
        return TrainingConfig(int(self.n_train), p_train)

    def with_snr(self, snr_db):
        return replace(self, snr_db=float(snr_db))


_LABEL_RE = re.compile(
    r"^(?:(?P<perfect>perfect)|estimated\(N=(?P<n>\d+)\))/"
    r"(?:(?P<csit>none|unlimited)|rfb\((?P<bits>\d+)\))$"
)


def parse_label(label, **kwargs):
    """Scenario from a label such as "estimated(N=3)/rfb(2)"."""
    m = _LABEL_RE.match(label.strip())
    if not m:
        raise ValueError(f"malformed scenario label {label!r}")
    fields = dict(kwargs)
    if m["perfect"]:
        fields["csir"] = "perfect"
    else:
        fields.update(csir="estimated", n_train=int(m["n"]))
    if m["bits"]:
        fields.update(csit="rfb", feedback_bits=int(m["bits"]))
    else:
        fields["csit"] = m["csit"]
    return Scenario(**fields)


def sample_rng(seed, block):
    """Counter-based generator for sample block `block` of run `seed`."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


def draw_effective_amplitudes(scenario, n_samples, seed):
    """Per-sample amplitude seen by the capacity formula.

    Perfect CSIR gives |theta|.  Estimated CSIR gives the gamma-percentile
    r* of |theta| under the posterior given the pilot estimate.
    """
    channel = scenario.channel
    training = scenario.training
    table = percentile_table(scenario.gamma) if training is not None else None
    out = np.empty(int(n_samples))
    for block, start in enumerate(range(0, int(n_samples), BLOCK_SIZE)):
        stop = min(start + BLOCK_SIZE, int(n_samples))
        rng = sample_rng(seed, block)
        # full blocks are always drawn so sample i depends only on (seed, i)
        theta = sample_state(channel, rng, BLOCK_SIZE)
        if training is None:
            out[start:stop] = np.abs(theta[: stop - start])
            continue
        theta_hat = ml_estimate(theta, training, channel, rng)[: stop - start]
        post = posterior_of(theta_hat, channel, training)
        out[start:stop] = table(np.abs(post.mean), np.sqrt(post.var / 2.0))
    return out


def _power_allocation(scenario, amplitudes):
    gains = amplitudes**2 / scenario.channel.noise_var
    p_avg = scenario.tx_power
    if scenario.csit == "none":
        return np.full(gains.shape, p_avg)
    if scenario.csit == "unlimited":
        return WaterFilling(p_avg=p_avg).fit(gains).predict(gains)
    quantizer = LloydMaxQuantizer(n_levels=2 ** int(scenario.feedback_bits)).fit(amplitudes)
    cells = quantizer.transform(amplitudes)
    probs = np.bincount(cells, minlength=quantizer.n_cells) / cells.size
    cell_gains = quantizer.levels_**2 / scenario.channel.noise_var
    per_cell = WaterFilling(p_avg=p_avg).fit(cell_gains, sample_weight=probs).predict(cell_gains)
    return per_cell[cells]


def sample_capacities(scenario, n_samples, seed):
    """Per-sample outage capacities in bits."""
    amplitudes = draw_effective_amplitudes(scenario, n_samples, seed)
    # the power policy is solved on the same samples it is evaluated on
    power = _power_allocation(scenario, amplitudes)
    return np.log2(1.0 + amplitudes**2 * power / scenario.channel.noise_var)


def run_point(scenario, n_samples, seed):
    """Mean outage capacity and its standard error, in bits."""
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    caps = sample_capacities(scenario, n_samples, seed)
    mean = math.fsum(caps) / n_samples
    if n_samples == 1:
        return mean, 0.0
    var = math.fsum((caps - mean) ** 2) / (n_samples - 1)
    return mean, math.sqrt(var / n_samples)


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    scenario: str
    mean_bits: float
    stderr_bits: float
    n_samples: int


@dataclass
class SweepResult:
    rows: List[SweepRow]

    CSV_HEADER = ("snr_db", "scenario", "mean_bits", "stderr_bits", "n_samples")

    def labels(self):
        return list(dict.fromkeys(r.scenario for r in self.rows))

    def curve(self, label):
        rows = sorted((r for r in self.rows if r.scenario == label), key=lambda r: r.snr_db)
        if not rows:
            raise KeyError(f"scenario {label!r} not in sweep")
        return (
            np.array([r.snr_db for r in rows]),
            np.array([r.mean_bits for r in rows]),
            np.array([r.stderr_bits for r in rows]),
        )

    def to_csv(self, path):
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write(",".join(self.CSV_HEADER) + "\n")
            for r in self.rows:
                fh.write(f"{float(r.snr_db)!r},{r.scenario},{float(r.mean_bits)!r},"
                         f"{float(r.stderr_bits)!r},{int(r.n_samples)}\n")

    @classmethod
    def from_csv(cls, path):
        with open(path, encoding="ascii") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or tuple(lines[0].split(",")) != cls.CSV_HEADER:
            raise ValueError(f"{path}: missing or wrong header")
        rows = []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            rows.append(SweepRow(float(parts[0]), parts[1], float(parts[2]), float(parts[3]),
                                 int(parts[4])))
        return cls(rows)


def run_sweep(scenarios, snr_grid_db, n_samples, seed, workers=1):
    """Run every (scenario, SNR) cell; rows come out scenario-major.

    Results are identical for any `workers` count (0 means one per CPU).
    """
    scenarios = list(scenarios)
    snrs = [float(s) for s in snr_grid_db]
    if not scenarios or not snrs:
        raise ValueError("scenarios and snr grid must be nonempty")
    cells = [(sc.with_snr(s), s) for sc in scenarios for s in snrs]
    for gamma in {sc.gamma for sc in scenarios if sc.csir == "estimated"}:
        percentile_table(gamma)  # build shared tables before fanning out

    def one(cell):
        sc, snr = cell
        mean, se = run_point(sc, n_samples, seed)
        return SweepRow(snr, sc.label, mean, se, int(n_samples))

    if workers == 1:
        rows = [one(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers or None) as pool:
            rows = list(pool.map(one, cells))
    return SweepResult(rows)


def snr_for_rate(result, label, target_bits):
    """SNR (dB) at which the curve of `label` reaches `target_bits`.

    The curve is made monotone by a running maximum and inverted by linear
    interpolation at its first crossing of the target.
    """
    snr, mean, _ = result.curve(label)
    mono = np.maximum.accumulate(mean)
    if not mono[0] <= target_bits <= mono[-1]:
        raise ValueError(
            f"target {target_bits} bits outside [{mono[0]:.4g}, {mono[-1]:.4g}] for {label!r}"
        )
    i = int(np.searchsorted(mono, target_bits, side="left"))
    if mono[i] == target_bits or i == 0:
        return float(snr[i])
    frac = (target_bits - mono[i - 1]) / (mono[i] - mono[i - 1])
    return float(snr[i - 1] + frac * (snr[i] - snr[i - 1]))
