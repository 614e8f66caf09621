"""Line-oriented run configuration.

Each non-blank line is ``section.key = value``; ``#`` starts a comment that
runs to the end of the line; values are unquoted. Keys may appear in any
order but at most once. Every syntax error and every invalid value in a file
is collected before anything is raised.
"""

import math
from dataclasses import dataclass, field

from .contraction import SolverSettings
from .domain import BoundarySpec, CoefficientField, EndpointSpec, ProblemSpec
from .errors import ConfigParseError, ConfigValidationError, ExpressionError
from .expressions import parse_expression

SCHEMA = 1


def _expr(text):
    return str(parse_expression(text))


def _opt_expr(text):
    return "" if text.strip() == "" else _expr(text)


def _float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _int(text):
    return int(text)


def _bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _choice(*options):
    def convert(text):
        low = text.strip().lower()
        if low not in options:
            raise ValueError(f"{text!r} is not one of {', '.join(options)}")
        return low

    return convert


def _auto_or(convert):
    def wrapped(text):
        return "auto" if text.strip().lower() == "auto" else convert(text)

    return wrapped


def _float_list(text):
    items = [s for s in text.replace(",", " ").split()]
    if not items:
        raise ValueError("empty list")
    return tuple(_float(s) for s in items)


def _perturbation(text):
    low = text.strip().lower()
    if low in ("", "none"):
        return ()
    names = tuple(sorted({s.strip() for s in low.split(",") if s.strip()}))
    for n in names:
        if n not in ("b", "c"):
            raise ValueError(f"only b and c can be moved into the perturbation, not {n!r}")
    return names


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value) if value else "none"
    return str(value)


_ENDPOINT = {
    "kind": (_choice("dirichlet", "robin"), "dirichlet"),
    "alpha": (_opt_expr, ""),
    "beta": (_opt_expr, ""),
    "g": (_expr, "0"),
}

SCHEMA_KEYS = {
    "problem": {
        "a": (_expr, "1"),
        "b": (_expr, "0"),
        "c": (_expr, "0"),
        "d": (_expr, "0"),
        "e": (_expr, "0"),
        "f": (_expr, "0"),
        "u0": (_expr, "0"),
        "exact": (_opt_expr, ""),
        "q": (_float, 2.0),
        "T": (_float, 1.0),
        "perturbation": (_perturbation, ()),
    },
    "left": dict(_ENDPOINT),
    "right": dict(_ENDPOINT),
    "grid": {
        "n_cells": (_int, 64),
        "n_steps": (_int, 1000),
    },
    "solver": {
        "tol": (_float, 1e-8),
        "max_iters": (_int, 200),
        "ratio_max": (_float, 0.9),
        "target": (_float, 0.5),
        "freeze": (_choice("left", "midpoint"), "left"),
        "theta": (_float, 1.0),
        "windows": (_auto_or(_int), "auto"),
        "calibration": (_auto_or(_float), "auto"),
    },
    "diagnostics": {
        "theta0": (_float, 3.0 * math.pi / 4.0),
        "n_taus": (_int, 10),
        "r_min": (_float, 1.0),
        "r_max": (_float, 1e6),
        "n_radii": (_int, 16),
        "iterations": (_int, 50),
        "gammas": (_float_list, (0.0, 1.0, 10.0, 100.0, 1000.0)),
        "deltas": (_float_list, (0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5)),
        "n_random": (_int, 5),
    },
    "output": {
        "dir": (str, "out"),
        "solution": (_bool, True),
    },
    "run": {
        "seed": (_int, 0),
        "refinements": (_int, 3),
        "study": (_choice("time", "space", "both"), "time"),
    },
}


# data keys that problem.exact replaces
_MANUFACTURED_KEYS = {("problem", "f"), ("problem", "u0"), ("left", "g"), ("right", "g")}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``values`` maps ``(section, key)`` to typed values."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, dotted):
        section, key = dotted.split(".", 1)
        return self.values[(section, key)]

    def with_overrides(self, **overrides):
        """Copy with ``section__key=value`` overrides (already typed)."""
        values = dict(self.values)
        for name, value in overrides.items():
            section, key = name.split("__", 1)
            values[(section, key)] = value
        errors = _validate(values)
        if errors:
            raise ConfigValidationError(errors)
        return RunConfig(values)

    @property
    def manufactured(self):
        return bool(self["problem.exact"])

    def solver_settings(self):
        windows = self["solver.windows"]
        calibration = self["solver.calibration"]
        return SolverSettings(
            tol=self["solver.tol"],
            max_iters=self["solver.max_iters"],
            ratio_max=self["solver.ratio_max"],
            target=self["solver.target"],
            freeze=self["solver.freeze"],
            theta=self["solver.theta"],
            windows=None if windows == "auto" else windows,
            calibration=None if calibration == "auto" else calibration,
            seed=self["run.seed"],
        )

    def endpoint(self, side):
        kind = self[f"{side}.kind"]
        alpha, beta = self[f"{side}.alpha"], self[f"{side}.beta"]
        if kind == "dirichlet":
            return EndpointSpec("dirichlet", g=self[f"{side}.g"])
        return EndpointSpec("robin", alpha or "0", beta or "1", self[f"{side}.g"])

    def skeleton(self):
        """Problem with coefficients, boundary kinds, grids and the configured data."""
        return ProblemSpec(
            coefficients=CoefficientField(*(self[f"problem.{k}"] for k in "abcde")),
            boundary=BoundarySpec(self.endpoint("left"), self.endpoint("right")),
            f=self["problem.f"],
            u0=self["problem.u0"],
            q=self["problem.q"],
            T=self["problem.T"],
            n_cells=self["grid.n_cells"],
            n_steps=self["grid.n_steps"],
            perturbation=frozenset(self["problem.perturbation"]),
        )

    def problem_spec(self):
        """The problem to solve; manufactured data replace f, g, u0 when ``exact`` is set."""
        from .manufacture import manufactured_spec

        spec = self.skeleton()
        if self.manufactured:
            return manufactured_spec(self["problem.exact"], spec)
        return spec

    def effective_text(self):
        """Every key with its effective value, in schema order; re-parses to an equal config."""
        lines = [f"# effective configuration (schema {SCHEMA})"]
        for section, keys in SCHEMA_KEYS.items():
            for key in keys:
                line = f"{section}.{key} = {_format(self.values[(section, key)])}"
                if self.manufactured and (section, key) in _MANUFACTURED_KEYS:
                    line = f"# {line}  (replaced by problem.exact)"
                lines.append(line)
        return "\n".join(lines) + "\n"


def _strip_comment(line):
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def _validate(values):
    errors = []

    def check(cond, message):
        if not cond:
            errors.append(message)

    check(values[("problem", "q")] > 1, "q must exceed 1")
    check(values[("problem", "T")] > 0, "T must be positive")
    check(values[("grid", "n_cells")] >= 3, "grid.n_cells must be at least 3")
    check(values[("grid", "n_steps")] >= 1, "grid.n_steps must be at least 1")
    check(values[("solver", "tol")] > 0, "tol must be positive")
    check(values[("solver", "max_iters")] >= 1, "solver.max_iters must be at least 1")
    check(0 < values[("solver", "ratio_max")] < 1, "solver.ratio_max must lie in (0, 1)")
    check(0 < values[("solver", "target")] < 1, "solver.target must lie in (0, 1)")
    check(0 < values[("solver", "theta")] <= 1, "solver.theta must lie in (0, 1]")
    w = values[("solver", "windows")]
    check(w == "auto" or w >= 1, "solver.windows must be auto or a positive integer")
    c = values[("solver", "calibration")]
    check(c == "auto" or c > 0, "solver.calibration must be auto or positive")
    theta0 = values[("diagnostics", "theta0")]
    check(math.pi / 2 <= theta0 < math.pi, "diagnostics.theta0 must lie in [pi/2, pi)")
    check(values[("diagnostics", "n_taus")] >= 1, "diagnostics.n_taus must be at least 1")
    check(0 < values[("diagnostics", "r_min")] <= values[("diagnostics", "r_max")], "diagnostics radii must satisfy 0 < r_min <= r_max")
    check(values[("diagnostics", "n_radii")] >= 1, "diagnostics.n_radii must be at least 1")
    check(values[("diagnostics", "iterations")] >= 1, "diagnostics.iterations must be at least 1")
    check(all(g >= 0 for g in values[("diagnostics", "gammas")]), "diagnostics.gammas must be nonnegative")
    check(all(d >= 0 for d in values[("diagnostics", "deltas")]), "diagnostics.deltas must be nonnegative")
    check(values[("diagnostics", "n_random")] >= 0, "diagnostics.n_random must be nonnegative")
    check(values[("run", "refinements")] >= 1, "run.refinements must be at least 1")
    for side in ("left", "right"):
        if values[(side, "kind")] == "dirichlet":
            for key in ("alpha", "beta"):
                check(not values[(side, key)], f"{side}.{key} only applies to robin boundaries")
    return errors


def parse_config(text):
    """Parse config text into a :class:`RunConfig`.

    Raises
    ------
    ConfigParseError
        Malformed lines, unknown or duplicate keys (all of them, with line numbers).
    ConfigValidationError
        Values that fail conversion or range checks (all of them).
    """
    parse_errors = []
    raw = {}
    lines_of = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line).strip()
        if not body:
            continue
        if "=" not in body:
            parse_errors.append((lineno, f"expected 'section.key = value', got {body!r}"))
            continue
        name, value = (s.strip() for s in body.split("=", 1))
        if "." not in name:
            parse_errors.append((lineno, f"key {name!r} lacks a section prefix"))
            continue
        section, key = name.split(".", 1)
        if section not in SCHEMA_KEYS:
            parse_errors.append((lineno, f"unknown section {section!r}"))
            continue
        if key not in SCHEMA_KEYS[section]:
            parse_errors.append((lineno, f"unknown key {name!r}"))
            continue
        if (section, key) in raw:
            parse_errors.append((lineno, f"duplicate key {name!r} (first set on line {lines_of[(section, key)]})"))
            continue
        raw[(section, key)] = value
        lines_of[(section, key)] = lineno
    if parse_errors:
        raise ConfigParseError(parse_errors)

    errors = []
    values = {}
    for section, keys in SCHEMA_KEYS.items():
        for key, (convert, default) in keys.items():
            if (section, key) not in raw:
                values[(section, key)] = convert(default) if isinstance(default, str) else default
                continue
            text_value = raw[(section, key)]
            try:
                values[(section, key)] = convert(text_value)
            except (ExpressionError, ValueError) as exc:
                errors.append(f"line {lines_of[(section, key)]}: {section}.{key}: {exc}")
                values[(section, key)] = default
    if values[("problem", "exact")]:
        for key in ("f", "u0"):
            if (("problem", key)) in raw:
                errors.append(f"line {lines_of[('problem', key)]}: problem.{key} cannot be combined with problem.exact")
        for side in ("left", "right"):
            if (side, "g") in raw:
                errors.append(f"line {lines_of[(side, 'g')]}: {side}.g cannot be combined with problem.exact")
    errors.extend(_validate(values))
    if errors:
        raise ConfigValidationError(errors)
    return RunConfig(values)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
