"""Scenario runner: analytic and Monte Carlo sweeps written as CSV files.

A scenario is a YAML mapping::

    profile: nlos              # or los; sets alpha_s to 4 or 2
    network:                   # NetworkConfig overrides
      lambda_m: 1.0e-6
    sweep:
      density_ratio: [1, 2, 5, 10, 20, 50]   # or alpha_s: [...], with ratio: 10
    outputs: [assoc_probs, distance_pdf, spectral_efficiency]
    mc: {enabled: true, n: 100000, seed: 1, shadowing: false}
    distance: {ratio: 10, bins: 40}
    tolerance: {assoc: 1.0e-8, rate: 1.0e-6}
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__, distances, montecarlo
from .association import prob_case_closed
from .errors import ConfigError, HetNetError
from .model import AssociationCase, NetworkConfig, Tier
from .rates import spectral_efficiency

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_MODULE = 4

OUTPUTS = ("assoc_probs", "distance_pdf", "spectral_efficiency")
PROFILES = {"nlos": 4.0, "los": 2.0}
_SE_COLUMNS = ("se_ul_decoupled", "se_dl_decoupled", "se_ul_coupled", "se_dl_coupled")
_DISTANCE_PAIRS = (
    (AssociationCase.CASE1, Tier.MCELL),
    (AssociationCase.CASE2, Tier.MCELL),
    (AssociationCase.CASE2, Tier.SCELL),
    (AssociationCase.CASE4, Tier.SCELL),
    (distances.COUPLED, Tier.MCELL),
)


@dataclass(frozen=True)
class Scenario:
    base: NetworkConfig
    sweep_name: str | None = None
    sweep_values: tuple = ()
    outputs: tuple = OUTPUTS
    mc_enabled: bool = False
    mc_n: int = 100_000
    seed: int = 0
    shadowing: bool = False
    distance_ratio: float | None = None
    distance_bins: int = 40
    assoc_tol: float = 1e-8
    rate_tol: float = 1e-6
    raw: dict = field(default_factory=dict, compare=False)

    def points(self) -> list[NetworkConfig]:
        """Configurations of the sweep, in order."""
        if self.sweep_name == "density_ratio":
            return [self.base.with_ratio(r) for r in self.sweep_values]
        if self.sweep_name == "alpha_s":
            return [self.base.replace(alpha_s=a) for a in self.sweep_values]
        return [self.base]


def _mapping(obj, name):
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ConfigError(f"'{name}' must be a mapping")
    return obj


def _number_list(values, name):
    if not isinstance(values, list) or not values:
        raise ConfigError(f"sweep '{name}' must be a nonempty list")
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigError(f"sweep '{name}' must contain numbers") from None
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError(f"sweep '{name}' must be strictly increasing")
    return out


def parse_scenario(data, *, profile: str | None = None, mc_n: int | None = None,
                   seed: int | None = None) -> Scenario:
    """Validate a scenario mapping; keyword arguments override file values."""
    data = _mapping(data, "scenario")
    known = {"profile", "network", "sweep", "outputs", "mc", "distance", "tolerance"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")

    network = dict(_mapping(data.get("network"), "network"))
    names = {f.name for f in fields(NetworkConfig)}
    bad = set(network) - names
    if bad:
        raise ConfigError(f"unknown network parameters: {sorted(bad)}")
    profile = profile or data.get("profile")
    if profile is not None:
        if str(profile).lower() not in PROFILES:
            raise ConfigError(f"profile must be one of {sorted(PROFILES)}")
        network["alpha_s"] = PROFILES[str(profile).lower()]

    sweep = _mapping(data.get("sweep"), "sweep")
    sweep_name, sweep_values = None, ()
    axes = [k for k in ("density_ratio", "alpha_s") if k in sweep]
    if len(axes) > 1 or set(sweep) - {"density_ratio", "alpha_s", "ratio"}:
        raise ConfigError("sweep takes one of 'density_ratio' or 'alpha_s' (plus 'ratio')")
    if axes:
        sweep_name = axes[0]
        sweep_values = _number_list(sweep[sweep_name], sweep_name)
    try:
        if "ratio" in sweep:
            network["lambda_s"] = float(sweep["ratio"]) * float(network.get("lambda_m", 1e-6))
        base = NetworkConfig(**{k: (None if v is None else float(v)) for k, v in network.items()})
        points = Scenario(base, sweep_name, sweep_values).points()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid network configuration: {exc}") from None
    del points  # constructing them validates every sweep point

    outputs = data.get("outputs", list(OUTPUTS))
    if isinstance(outputs, str):
        outputs = [outputs]
    if not isinstance(outputs, list) or not outputs or set(outputs) - set(OUTPUTS):
        raise ConfigError(f"outputs must be a nonempty list drawn from {list(OUTPUTS)}")

    mc = _mapping(data.get("mc"), "mc")
    dist = _mapping(data.get("distance"), "distance")
    tol = _mapping(data.get("tolerance"), "tolerance")
    try:
        scenario = Scenario(
            base=base,
            sweep_name=sweep_name,
            sweep_values=sweep_values,
            outputs=tuple(dict.fromkeys(outputs)),
            mc_enabled=bool(mc.get("enabled", False)) or (mc_n is not None and mc_n > 0),
            mc_n=int(mc_n if mc_n is not None else mc.get("n", 100_000)),
            seed=int(seed if seed is not None else mc.get("seed", 0)),
            shadowing=bool(mc.get("shadowing", False)),
            distance_ratio=None if dist.get("ratio") is None else float(dist["ratio"]),
            distance_bins=int(dist.get("bins", 40)),
            assoc_tol=float(tol.get("assoc", 1e-8)),
            rate_tol=float(tol.get("rate", 1e-6)),
            raw=data,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario value: {exc}") from None
    if scenario.mc_enabled and scenario.mc_n < 1:
        raise ConfigError("mc.n must be at least 1")
    if scenario.distance_bins < 1:
        raise ConfigError("distance.bins must be at least 1")
    if not (0 < scenario.assoc_tol < 1 and 0 < scenario.rate_tol < 1):
        raise ConfigError("tolerances must lie in (0, 1)")
    return scenario


def load_scenario(path, **overrides) -> Scenario:
    """Read and validate a YAML scenario file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return parse_scenario(data, **overrides)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".10g")


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _point_seed(seed: int, index: int) -> int:
    """Independent, reproducible seed of sweep point ``index``."""
    return int(np.random.SeedSequence([abs(int(seed)), int(seed < 0), index]).generate_state(1)[0])


class Runner:
    """Evaluates the requested outputs of a scenario."""

    def __init__(self, scenario: Scenario, threads: int = 1):
        self.scenario = scenario
        self.threads = max(1, int(threads))
        self.warnings: list[str] = []
        self.mc_summary: list[dict] = []
        self._mc_cache: dict = {}

    def _map(self, fn, items):
        items = list(items)
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(fn, items))
        return [fn(x) for x in items]

    def _mc(self, index: int, cfg: NetworkConfig, collect=False):
        key = (index, collect)
        if key not in self._mc_cache:
            sc = self.scenario
            res = montecarlo.simulate(cfg, sc.mc_n, _point_seed(sc.seed, index), shadowing=sc.shadowing,
                                      collect_distances=collect, threads=self.threads)
            if res.resamples:
                self.warnings.append(f"point {index}: {res.resamples} realizations resampled (empty tier)")
            self.mc_summary.append({
                "point": index,
                "seed": res.seed,
                "n": res.n_realizations,
                "resamples": res.resamples,
                "case3_count": int(res.case_counts[2]),
                "mean_interference_mw": res.mean_interference,
            })
            self._mc_cache[key] = res
        return self._mc_cache[key]

    def _axis(self, cfg):
        return cfg.lambda_s / cfg.lambda_m, cfg.alpha_s

    def assoc_probs(self):
        sc = self.scenario
        header = ["ratio", "alpha_s", "case1", "case2", "case4"]
        if sc.mc_enabled:
            header += ["case1_mc", "case1_ci", "case2_mc", "case2_ci", "case4_mc", "case4_ci", "case3_mc"]

        def row(item):
            i, cfg = item
            out = [*self._axis(cfg)]
            out += [prob_case_closed(cfg, c, rel_tol=sc.assoc_tol) for c in (1, 2, 4)]
            return out

        rows = self._map(row, enumerate(sc.points()))
        if sc.mc_enabled:
            for i, cfg in enumerate(sc.points()):
                res = self._mc(i, cfg)
                for c in (1, 2, 4):
                    rows[i] += list(res.case_frequency(c))
                rows[i].append(res.case_counts[2] / res.n_realizations)
        return header, rows

    def distance_pdf(self):
        sc = self.scenario
        cfg = sc.base if sc.distance_ratio is None else sc.base.with_ratio(sc.distance_ratio)
        res = self._mc(len(sc.points()), cfg, collect=True) if sc.mc_enabled else None
        rows = []
        for case, tier in _DISTANCE_PAIRS:
            label = case if case == distances.COUPLED else str(int(case))
            try:
                top = distances.quantile(cfg, case, tier, 0.999)
            except HetNetError as exc:
                self.warnings.append(f"distance pdf ({label}, {tier.value}) skipped: {exc}")
                continue
            edges = np.linspace(0.0, top, sc.distance_bins + 1)
            centers = 0.5 * (edges[:-1] + edges[1:])
            pdf = distances.pdf(cfg, case, tier, centers)
            hist = [None] * centers.size
            if res is not None:
                samples = res.distance_samples(case, tier)
                if samples.size:
                    counts, _ = np.histogram(samples, bins=edges)
                    hist = counts / (samples.size * np.diff(edges))
            rows += [[label, tier.value, x, p, h] for x, p, h in zip(centers, pdf, hist)]
        return ["case", "tier", "x_m", "pdf", "mc_density"], rows

    def spectral_efficiency(self):
        sc = self.scenario
        header = ["ratio", *_SE_COLUMNS]
        if sc.mc_enabled:
            for name in _SE_COLUMNS:
                header += [f"{name}_mc", f"{name}_ci"]
        header += ["ul_gain", "alpha_s"]
        if sc.mc_enabled:
            header += ["ul_gain_mc", "ul_gain_ci"]

        def analytic(item):
            _, cfg = item
            return spectral_efficiency(cfg, rel_tol=sc.rate_tol)

        reports = self._map(analytic, enumerate(sc.points()))
        rows = []
        for i, (cfg, rep) in enumerate(zip(sc.points(), reports)):
            ratio, alpha_s = self._axis(cfg)
            row = [ratio] + [getattr(rep, name) for name in _SE_COLUMNS]
            if sc.mc_enabled:
                res = self._mc(i, cfg)
                for name in _SE_COLUMNS:
                    row += list(res.spectral_efficiency(name))
            row += [rep.ul_gain, alpha_s]
            if sc.mc_enabled:
                row += list(res.ul_gain)
            rows.append(row)
        return header, rows


def run(scenario_path, out_dir, *, mc_n=None, seed=None, threads=None, profile=None) -> int:
    """Run a scenario file and write its outputs; returns the exit status.

    ``manifest.json`` is written in every case, recording the error on failure.
    """
    start = time.time()
    out = Path(out_dir)
    manifest = {
        "scenario_file": str(scenario_path),
        "versions": {
            "hetnet": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "outputs": {},
        "warnings": [],
        "status": "error",
    }
    if threads is None:
        threads = int(os.environ.get("HETNET_THREADS", "1") or 1)
    manifest["threads"] = threads
    code = EXIT_UNEXPECTED
    runner = None
    try:
        out.mkdir(parents=True, exist_ok=True)
        scenario = load_scenario(scenario_path, profile=profile, mc_n=mc_n, seed=seed)
        manifest["config"] = asdict(scenario.base)
        manifest["scenario"] = scenario.raw
        manifest["sweep"] = {"name": scenario.sweep_name, "values": list(scenario.sweep_values)}
        manifest["mc"] = {"enabled": scenario.mc_enabled, "n": scenario.mc_n, "seed": scenario.seed,
                          "shadowing": scenario.shadowing}
        runner = Runner(scenario, threads)
        for name in scenario.outputs:
            header, rows = getattr(runner, name)()
            path = out / f"{name}.csv"
            _write_csv(path, header, rows)
            manifest["outputs"][name] = path.name
        manifest["status"] = "ok"
        code = EXIT_OK
    except ConfigError as exc:
        code, manifest["error"] = EXIT_CONFIG, f"config error: {exc}"
    except OSError as exc:
        code, manifest["error"] = EXIT_IO, f"I/O error: {exc}"
    except HetNetError as exc:
        code, manifest["error"] = EXIT_MODULE, f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # noqa: BLE001 - reported through the exit status
        code, manifest["error"] = EXIT_UNEXPECTED, f"unexpected {type(exc).__name__}: {exc}"
    finally:
        if runner is not None:
            manifest["warnings"] = runner.warnings
            manifest["mc_points"] = sorted(runner.mc_summary, key=lambda d: d["point"])
        manifest["exit_code"] = code
        manifest["wall_time_s"] = round(time.time() - start, 3)
        try:
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
                json.dump(manifest, fh, indent=2, default=str)
                fh.write("\n")
        except OSError as exc:
            print(f"hetnet: cannot write manifest: {exc}", file=sys.stderr)
            if code == EXIT_OK:
                code = EXIT_IO
    if "error" in manifest:
        print(f"hetnet: {manifest['error']}", file=sys.stderr)
    return code


_EPILOG = f"""exit status:
  {EXIT_OK}  success
  {EXIT_UNEXPECTED}  unexpected internal error
  {EXIT_CONFIG}  invalid command line or scenario file
  {EXIT_IO}  file system error (reading the scenario, writing outputs)
  {EXIT_MODULE}  numerical failure in a computation (non-convergence, bad contour, ...)

The thread count defaults to the HETNET_THREADS environment variable, else 1.
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetnet",
        description="Association, distance and spectral-efficiency sweeps for decoupled UL/DL access.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a scenario file", epilog=_EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("scenario", help="YAML scenario file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--mc-n", type=int, default=None, help="Monte Carlo realizations per point (enables MC)")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--threads", type=int, default=None, help="worker threads")
    prof = p.add_mutually_exclusive_group()
    prof.add_argument("--los", dest="profile", action="store_const", const="los", help="alpha_s = 2")
    prof.add_argument("--nlos", dest="profile", action="store_const", const="nlos", help="alpha_s = 4")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("hetnet: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.scenario, args.out, mc_n=args.mc_n, seed=args.seed, threads=args.threads,
               profile=args.profile)


if __name__ == "__main__":
    sys.exit(main())
