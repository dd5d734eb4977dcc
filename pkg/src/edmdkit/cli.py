"""Command-line front end.

Subcommands: simulate (reference-system snapshot CSVs), fit (CSV to model
JSON), predict (k-step outputs), eig (spectrum table), diagnose (defect
report). Exit codes: 0 success, 2 input or usage error, 3 numerical failure.
The KOOPMAN_LOG environment variable (quiet, info, debug) controls stderr
verbosity; stdout carries only payloads.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import diagnostics, systems
from .dictionary import Dictionary, make_standard_dictionary
from .empirical import read_snapshot_csv, write_snapshot_csv
from .errors import (
    ConfigurationError,
    CsvFormatError,
    DataValidationError,
    DivergenceError,
    EdmdError,
    InputShapeError,
    MissingOutputError,
    ModelFormatError,
    SingularSystemError,
)
from .fit import fit_koopman
from .solver import RegularizerSpec
from .spectral import load_model, predict_trajectory, save_model

logger = logging.getLogger("edmdkit.cli")

_USAGE_ERRORS = (
    CsvFormatError,
    ModelFormatError,
    ConfigurationError,
    InputShapeError,
    DataValidationError,
    MissingOutputError,
)
_NUMERICAL_ERRORS = (SingularSystemError, DivergenceError, np.linalg.LinAlgError)


def _setup_logging():
    level = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("KOOPMAN_LOG", "quiet").lower(), logging.ERROR
    )
    root = logging.getLogger("edmdkit")
    root.setLevel(level)
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(handler)


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError("config file must hold a JSON object")
    return cfg


def _pick(flag_value, config_value, default=None):
    """Precedence: command-line flag, then config file, then default."""
    if flag_value is not None:
        return flag_value
    if config_value is not None:
        return config_value
    return default


def _parse_x0(text):
    try:
        return np.array([float(tok) for tok in text.split(",") if tok.strip() != ""])
    except ValueError:
        raise ConfigurationError(f"--x0 must be comma-separated numbers, got {text!r}") from None


def _dictionary_from_config(spec):
    if not isinstance(spec, dict):
        raise ConfigurationError("config needs a 'dictionary' object")
    if "basis" in spec:
        return Dictionary.from_json_dict(spec)
    if "state_dim" not in spec:
        raise ConfigurationError("dictionary spec needs state_dim")
    return make_standard_dictionary(
        int(spec["state_dim"]),
        include_state=bool(spec.get("include_state", False)),
        monomial_degree=spec.get("monomial_degree"),
        rbf_centers=spec.get("rbf_centers"),
        rbf_bandwidth=spec.get("rbf_bandwidth"),
        output_guess_rows=spec.get("output_guess_rows"),
    )


def _system_from_config(spec):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError("config needs a 'system' object with a kind")
    kind = spec["kind"]
    om = _output_map_from_config(spec.get("output_map"))
    if kind == "linear":
        return systems.ReferenceSystem.linear(spec["A"], output_map=om)
    if kind == "scalar_poly":
        return systems.ReferenceSystem.scalar_poly(spec["coefficients"], output_map=om)
    if kind == "van_der_pol":
        return systems.ReferenceSystem.van_der_pol(
            mu=spec.get("mu", 1.0), dt=spec.get("dt", 0.01), output_map=om
        )
    if kind == "duffing":
        return systems.ReferenceSystem.duffing(
            alpha=spec.get("alpha", 1.0), beta=spec.get("beta", 1.0),
            delta=spec.get("delta", 0.2), dt=spec.get("dt", 0.01), output_map=om,
        )
    if kind == "rotation":
        return systems.ReferenceSystem.rotation(
            rho=spec.get("rho", 1.0), theta=spec.get("theta", 0.1), output_map=om
        )
    raise ConfigurationError(f"unknown system kind {kind!r}")


def _output_map_from_config(spec):
    if spec is None:
        return systems.OutputMap.full_state()
    kind = spec.get("kind", "full_state")
    if kind == "full_state":
        return systems.OutputMap.full_state()
    if kind == "linear":
        return systems.OutputMap.linear(spec["C"])
    if kind == "component_powers":
        return systems.OutputMap.component_powers(spec["terms"])
    raise ConfigurationError(f"unknown output map kind {kind!r}")


def _fmt(v):
    return repr(float(v))


def _spectrum_lines(model, with_modes=False):
    header = "index,re,im,modulus,angle"
    if with_modes:
        header += "," + ",".join(f"mode_y{j + 1}" for j in range(model.n_outputs))
    lines = [header]
    for i, lam in enumerate(model.eigenvalues):
        fields = [str(i), _fmt(lam.real), _fmt(lam.imag),
                  _fmt(abs(lam)), _fmt(np.angle(lam))]
        if with_modes:
            fields.extend(_fmt(abs(model.modes[j, i])) for j in range(model.n_outputs))
        lines.append(",".join(fields))
    return lines


# --- subcommands ----------------------------------------------------------


def cmd_simulate(args):
    cfg = _load_config(args.config)
    if "system" not in cfg:
        raise ConfigurationError("simulate needs a config with a 'system' object")
    sys_obj = _system_from_config(cfg["system"])
    steps = int(_pick(args.steps, cfg.get("steps"), 1))
    x0_spec = cfg.get("x0")
    if args.x0 is not None:
        x0_set = [_parse_x0(args.x0)]
    elif isinstance(x0_spec, dict):
        x0_set = systems.random_initial_conditions(
            int(x0_spec.get("count", 1)), sys_obj.state_dim,
            bounds=tuple(x0_spec.get("bounds", (-1.0, 1.0))),
            seed=x0_spec.get("seed"),
        )
    elif x0_spec is not None:
        x0_set = np.atleast_2d(np.asarray(x0_spec, dtype=float))
    else:
        raise ConfigurationError("simulate needs x0 in the config or --x0")
    data = systems.generate_snapshots(sys_obj, x0_set, steps)
    out_path = cfg.get("output")
    if out_path:
        write_snapshot_csv(out_path, data)
        logger.info("wrote %d snapshot pairs to %s", data.m, out_path)
    else:
        write_snapshot_csv(sys.stdout, data)
    return 0


def cmd_fit(args):
    cfg = _load_config(args.config)
    input_path = _pick(args.input, cfg.get("input"))
    if input_path is None:
        raise ConfigurationError("fit needs an input CSV (--input or config)")
    dictionary = _dictionary_from_config(cfg.get("dictionary"))
    reg = RegularizerSpec.from_json_dict(cfg.get("regularizer", {"mode": "pseudoinverse"}))
    data = read_snapshot_csv(input_path)
    model = fit_koopman(dictionary, data, reg)
    model_path = _pick(args.model, cfg.get("model"))
    if model_path:
        save_model(model, model_path)
    print(f"n_L={model.n_functions} m={data.m} outputs={model.n_outputs}")
    for line in _spectrum_lines(model):
        print(line)
    print(f"gram_condition={_fmt(model.meta['gram_condition'])}")
    print(f"eig_condition={_fmt(model.meta['eig_condition'])}")
    if cfg.get("diagnostics"):
        report = diagnostics.full_report(dictionary, data, model)
        print(report.format_table())
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    x0 = _parse_x0(args.x0)
    if x0.shape[0] != model.dictionary.state_dim:
        raise InputShapeError(
            f"--x0 has {x0.shape[0]} components, model expects {model.dictionary.state_dim}"
        )
    steps = args.steps if args.steps is not None else 0
    traj = predict_trajectory(model, x0, steps)
    print("k," + ",".join(f"y{j + 1}" for j in range(traj.shape[1])))
    for k, row in enumerate(traj):
        print(",".join([str(k)] + [_fmt(v) for v in row]))
    return 0


def cmd_eig(args):
    model = load_model(args.model)
    if args.json:
        entries = []
        for i, lam in enumerate(model.eigenvalues):
            entry = {"index": i, "re": lam.real, "im": lam.imag,
                     "modulus": abs(lam), "angle": float(np.angle(lam))}
            if args.modes:
                entry["mode_magnitudes"] = [
                    abs(model.modes[j, i]) for j in range(model.n_outputs)
                ]
            entries.append(entry)
        print(json.dumps({"eigenvalues": entries}, indent=2))
    else:
        for line in _spectrum_lines(model, with_modes=args.modes):
            print(line)
    return 0


def cmd_diagnose(args):
    model = load_model(args.model)
    data = read_snapshot_csv(args.input)
    report = diagnostics.full_report(model.dictionary, data, model)
    if args.json:
        print(report.to_json())
    else:
        print(report.format_table())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="edmdkit",
        description="Koopman operator estimation from snapshot data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate snapshot CSV from a reference system")
    p.add_argument("--config", help="JSON file with system, x0, steps, output")
    p.add_argument("--x0", help="single initial state a,b,... (overrides config)")
    p.add_argument("--steps", type=int, help="steps per trajectory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a model from a snapshot CSV")
    p.add_argument("--config", help="JSON file with dictionary, regularizer, paths")
    p.add_argument("--input", help="snapshot CSV path")
    p.add_argument("--model", help="where to write the model JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="k-step prediction from a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--x0", required=True, help="initial state a,b,...")
    p.add_argument("--steps", type=int, default=0)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eig", help="print the model spectrum")
    p.add_argument("--model", required=True)
    p.add_argument("--modes", action="store_true", help="append mode magnitudes")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eig)

    p = sub.add_parser("diagnose", help="defect report for a model on a data set")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="snapshot CSV path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except EdmdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
