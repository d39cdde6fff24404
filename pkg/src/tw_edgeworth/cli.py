"""Command-line front end: ``tw-edgeworth <command> [options]``.

Exit codes: 0 success, 2 validation failure, 3 configuration error,
4 numerical non-convergence.  Errors are reported on stderr as one JSON
object.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass

import click
import numpy as np

from . import edgeworth, finite_n, limits, mc, validation
from .fredholm import DEFAULT_M

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4

COMMANDS = ("limits", "expand", "finite-n", "mc", "validate", "rate-fit")
RATE_COLUMNS = ("ensemble", "terms", "c", "s", "slope", "r2", "points")
CHECK_COLUMNS = ("name", "measured", "bound", "passed", "seconds")


class ConfigError(ValueError):
    """Rejected before any computation starts."""


@dataclass
class RunConfig:
    command: str
    s_range: tuple[float, float, float] = (limits.TABLE_MIN, limits.TABLE_MAX, limits.TABLE_STEP)
    n_list: tuple[int, ...] = ()
    c: float = 0.0
    beta: int = 1
    m: int = DEFAULT_M
    count: int = 100_000
    seed: int = 0
    out: str = "-"
    fmt: str = "csv"
    ensemble: str = "goe"
    method: str = "tridiagonal"
    quick: bool = False
    workers: int = 1
    source: str = ""
    terms: str = "three_term"
    dump: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        raw = json.loads(text)
        raw["s_range"] = tuple(raw["s_range"])
        raw["n_list"] = tuple(raw["n_list"])
        return cls(**raw)

    def s_grid(self) -> np.ndarray:
        lo, hi, step = self.s_range
        return limits.s_nodes(lo, hi, step)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        lo, hi, step = self.s_range
        if not (step > 0 and hi >= lo):
            raise ConfigError("--s needs min <= max and step > 0")
        if self.command in ("limits", "expand", "finite-n") and (
            lo < limits.TABLE_MIN or hi > limits.TABLE_MAX
        ):
            raise ConfigError(f"s must lie in [{limits.TABLE_MIN}, {limits.TABLE_MAX}]")
        if not 20 <= self.m <= 400:
            raise ConfigError("--m must lie in [20, 400]")
        if self.workers < 1:
            raise ConfigError("--workers must be positive")
        if self.command in ("expand", "finite-n", "mc") and not self.n_list:
            raise ConfigError("--n is required")
        if any(n < 1 for n in self.n_list):
            raise ConfigError("every n must be positive")
        if self.command == "expand" and self.ensemble not in ("gue", "goe"):
            raise ConfigError("expand needs --ensemble gue or goe")
        if self.command == "finite-n":
            if any(n % 2 for n in self.n_list):
                raise ConfigError("the exact pipeline includes the GOE factor, which needs even n")
            if any(n > 400 for n in self.n_list):
                raise ConfigError("finite-n supports n <= 400")
            if any(n + self.c <= 0 for n in self.n_list):
                raise ConfigError("need n + c > 0")
        if self.command == "mc":
            if self.beta not in (1, 2):
                raise ConfigError("--beta must be 1 or 2")
            if self.count < mc.MIN_DISTANCE_COUNT:
                raise ConfigError(f"--count must be at least {mc.MIN_DISTANCE_COUNT}")
            if self.method == "dense" and max(self.n_list) > mc.DENSE_LIMIT[self.beta]:
                raise ConfigError(f"dense sampling supports n <= {mc.DENSE_LIMIT[self.beta]}")
            if self.method not in ("dense", "tridiagonal"):
                raise ConfigError("--method must be dense or tridiagonal")
            if self.dump and len(self.n_list) != 1:
                raise ConfigError("--dump needs a single n")
            if not 0 <= self.seed < 2**64:
                raise ConfigError("--seed must be a 64-bit unsigned integer")
        if self.command == "rate-fit":
            if not self.source:
                raise ConfigError("rate-fit needs --in")
            if self.ensemble not in ("gue", "goe", "both"):
                raise ConfigError("rate-fit needs --ensemble gue, goe or both")
            if self.terms not in mc.MODEL_TERMS:
                raise ConfigError(f"--terms must be one of {', '.join(mc.MODEL_TERMS)}")
        for path in (self.out, self.dump):
            if path and path != "-":
                parent = os.path.dirname(os.path.abspath(path)) or "."
                if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
                    raise ConfigError(f"cannot write {path!r}")
        return self


# ---------------------------------------------------------------------------
# parsing helpers


def parse_s_range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return v, v, 1.0
        if len(parts) == 3:
            lo, hi, step = (float(x) for x in parts)
            return lo, hi, step
    except ValueError:
        pass
    raise ConfigError(f"--s expects a number or min:max:step, got {text!r}")


def parse_n_list(text: str) -> tuple[int, ...]:
    try:
        out = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"--n expects a comma-separated list of integers, got {text!r}") from None
    return tuple(sorted(set(out)))


# ---------------------------------------------------------------------------
# output


def _render(rows: list[dict], columns, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{k: r[k] for k in columns} for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    limits.write_rows_csv(buf, columns, rows)
    return buf.getvalue()


def _emit(cfg: RunConfig, rows: list[dict], columns) -> None:
    text = _render(rows, columns, cfg.fmt)
    if cfg.out == "-":
        click.echo(text, nl=False)
    else:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands


def run_limits(cfg: RunConfig) -> int:
    lo, hi, step = cfg.s_range
    tables = limits.build_tables(lo, hi, step, m=cfg.m, workers=cfg.workers)
    _emit(cfg, tables.rows(cfg.c), limits.CSV_COLUMNS)
    return EXIT_OK


def run_expand(cfg: RunConfig) -> int:
    lo, hi, step = cfg.s_range
    tables = limits.build_tables(lo, hi, step, m=cfg.m, workers=cfg.workers)
    at = edgeworth.gue_at if cfg.ensemble == "gue" else edgeworth.goe_sq_at
    rows = [at(pt, n, cfg.c).row() for n in cfg.n_list for pt in tables.points]
    _emit(cfg, rows, edgeworth.EXPANSION_COLUMNS)
    return EXIT_OK


def run_finite_n(cfg: RunConfig) -> int:
    rows = [finite_n.finite_n_row(n, cfg.c, float(s), cfg.m) for n in cfg.n_list for s in cfg.s_grid()]
    _emit(cfg, rows, finite_n.FINITE_N_COLUMNS)
    return EXIT_OK


def run_mc(cfg: RunConfig) -> int:
    tables = limits.build_tables(m=cfg.m, workers=cfg.workers)
    rows = []
    for n in cfg.n_list:
        params = mc.EnsembleParams(cfg.beta, n, cfg.count, cfg.seed)
        x = np.sort(mc.sample_max(params, method=cfg.method, workers=cfg.workers))
        if cfg.dump:
            mc.write_samples(cfg.dump, x)
        for model in mc.MODEL_TERMS:
            cdf = mc.expansion_cdf(cfg.beta, n, cfg.c, model, tables)
            rows.append({
                "n": n, "c": cfg.c, "beta": cfg.beta, "count": cfg.count, "seed": cfg.seed,
                "model": model, "sup_distance": mc.sup_distance(x, cdf),
            })
    _emit(cfg, rows, mc.SUMMARY_COLUMNS)
    return EXIT_OK


def run_validate(cfg: RunConfig) -> int:
    checks = validation.run_checks(quick=cfg.quick)
    rows = [c.as_dict() for c in checks]
    if cfg.fmt == "csv":
        for r in rows:
            r["passed"] = "pass" if r["passed"] else "FAIL"
    _emit(cfg, rows, CHECK_COLUMNS)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION


def _read_rows(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        text = fh.read()
    if text.lstrip().startswith("["):
        return json.loads(text)
    return list(csv.DictReader(io.StringIO(text)))


def _truncated(v: edgeworth.ExpansionValue, terms: str) -> float:
    return {"limit": v.leading, "two_term": v.first_order, "three_term": v.total}[terms]


def run_rate_fit(cfg: RunConfig) -> int:
    try:
        data = _read_rows(cfg.source)
    except OSError as exc:
        raise ConfigError(f"cannot read {cfg.source!r}: {exc}") from None
    need = {"n", "c", "s", "F_n2_exact", "F_n1_sq_exact"}
    if data and not need <= set(data[0]):
        raise ConfigError(f"input lacks columns {sorted(need - set(data[0]))}")
    ensembles = ("gue", "goe") if cfg.ensemble == "both" else (cfg.ensemble,)
    groups: dict[tuple, list[tuple[int, float]]] = {}
    for r in data:
        n, c, s = int(r["n"]), float(r["c"]), float(r["s"])
        pt = limits.limit_point(s, cfg.m)
        for ens in ensembles:
            if ens == "gue":
                err = abs(float(r["F_n2_exact"]) - _truncated(edgeworth.gue_at(pt, n, c), cfg.terms))
            else:
                err = abs(float(r["F_n1_sq_exact"]) - _truncated(edgeworth.goe_sq_at(pt, n, c), cfg.terms))
            groups.setdefault((ens, c, s), []).append((n, err))
    rows = []
    for (ens, c, s), pts in sorted(groups.items()):
        pts.sort()
        if len(pts) < 3:
            raise ConfigError(f"rate fit needs at least three n values (c={c}, s={s})")
        slope, r2 = mc.rate_fit([p[0] for p in pts], [p[1] for p in pts])
        rows.append({"ensemble": ens, "terms": cfg.terms, "c": c, "s": s, "slope": slope, "r2": r2, "points": len(pts)})
    _emit(cfg, rows, RATE_COLUMNS)
    return EXIT_OK


RUNNERS = {
    "limits": run_limits, "expand": run_expand, "finite-n": run_finite_n,
    "mc": run_mc, "validate": run_validate, "rate-fit": run_rate_fit,
}


def run(cfg: RunConfig) -> int:
    return RUNNERS[cfg.validate().command](cfg)


# ---------------------------------------------------------------------------
# click wiring


def _common(fn):
    opts = [
        click.option("--out", default="-", show_default=True, help="Output path, - for stdout."),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True),
        click.option("--m", default=DEFAULT_M, show_default=True, help="Quadrature nodes per determinant."),
        click.option("--workers", type=int, default=None,
                      help=f"Worker threads (default: ${mc.WORKERS_ENV} or the CPU count)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _config(command: str, **kw) -> RunConfig:
    if kw.get("workers") is None:
        kw["workers"] = mc.default_workers()
    if "s" in kw:
        kw["s_range"] = parse_s_range(kw.pop("s"))
    if "n" in kw:
        kw["n_list"] = parse_n_list(kw.pop("n") or "")
    return RunConfig(command=command, **kw)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Tracy-Widom limits, finite-n expansions and their numerical checks."""


@cli.command("limits")
@click.option("--s", default="-8:6:0.05", show_default=True, help="s grid as min:max:step.")
@click.option("--c", default=0.0, show_default=True, help="Centering shift used in eta.")
@_common
def limits_cmd(**kw):
    """Tabulate F2, q, p, the resolvent inner products, mu, nu, alpha and eta."""
    return run(_config("limits", **kw))


@cli.command("expand")
@click.option("--ensemble", type=click.Choice(["gue", "goe"]), required=True)
@click.option("--n", required=True, help="Comma-separated matrix sizes.")
@click.option("--c", default=0.0, show_default=True)
@click.option("--s", default="-3:3:0.1", show_default=True, help="s grid as min:max:step.")
@_common
def expand_cmd(**kw):
    """Expansion terms (GUE F_{n,2}, GOE F_{n,1}^2) on an s grid."""
    return run(_config("expand", **kw))


@cli.command("finite-n")
@click.option("--n", required=True, help="Comma-separated even matrix sizes.")
@click.option("--c", default=0.0, show_default=True)
@click.option("--s", default="-1", show_default=True, help="s value or min:max:step.")
@_common
def finite_n_cmd(**kw):
    """Exact finite-n GUE determinant, GOE factor and F_{n,1}^2."""
    return run(_config("finite-n", **kw))


@cli.command("mc")
@click.option("--beta", type=click.IntRange(1, 2), default=1, show_default=True)
@click.option("--n", required=True, help="Comma-separated matrix sizes.")
@click.option("--c", default=0.0, show_default=True)
@click.option("--count", default=100_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--method", type=click.Choice(["dense", "tridiagonal"]), default="tridiagonal", show_default=True)
@click.option("--dump", default="", help="Write the sorted samples (single n only).")
@_common
def mc_cmd(**kw):
    """Sample largest eigenvalues and report sup distances to the expansion models."""
    return run(_config("mc", **kw))


@cli.command("validate")
@click.option("--quick", is_flag=True, help="Only the sub-minute algebraic and boundary checks.")
@_common
def validate_cmd(**kw):
    """Run the invariant and oracle checks; exit 2 if any fails."""
    return run(_config("validate", **kw))


@cli.command("rate-fit")
@click.option("--in", "source", required=True, help="finite-n output (CSV or JSON).")
@click.option("--ensemble", type=click.Choice(["gue", "goe", "both"]), default="both", show_default=True)
@click.option("--terms", type=click.Choice(list(mc.MODEL_TERMS)), default="three_term", show_default=True)
@_common
def rate_fit_cmd(**kw):
    """Log-log slope against n of |exact - truncated expansion|, per (ensemble, c, s)."""
    return run(_config("rate-fit", **kw))


def _fail(exc: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="tw-edgeworth", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except (click.UsageError, click.BadParameter) as exc:
        return _fail(exc, EXIT_CONFIG)
    except click.Abort as exc:
        return _fail(exc, EXIT_CONFIG)
    except (ConfigError, mc.ParameterError) as exc:
        return _fail(exc, EXIT_CONFIG)
    except OSError as exc:
        return _fail(exc, EXIT_CONFIG)
    except ArithmeticError as exc:
        return _fail(exc, EXIT_NUMERIC)
    except ValueError as exc:
        return _fail(exc, EXIT_CONFIG)
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
