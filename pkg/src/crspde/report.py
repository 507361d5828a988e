"""Machine-readable reporting: canonical JSON, CSV tables, and figures.

The JSON payload is canonical (sorted keys, fixed layout, no timestamps), so
identical configs and seeds reproduce byte-identical files.  Every payload
records the schema version, the subcommand, the full parameter set, and the
package version, and validates against REPORT_SCHEMA.
"""

from __future__ import annotations

import csv
import json

import jsonschema
import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SCHEMA_VERSION = "crspde-report-1"

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "command", "params", "results", "code_version"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"type": "string"},
        "params": {"type": "object"},
        "results": {"type": "object"},
        "code_version": {"type": "string"},
        "passed": {"type": "boolean"},
    },
    "additionalProperties": False,
}


def build_payload(command: str, params: dict, results: dict,
                  passed: bool | None = None) -> dict:
    from . import __version__
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "params": params,
        "results": results,
        "code_version": __version__,
    }
    if passed is not None:
        payload["passed"] = bool(passed)
    validate_payload(payload)
    return payload


def validate_payload(payload: dict) -> None:
    jsonschema.validate(payload, REPORT_SCHEMA)


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _jsonable(obj):
    """Coerce numpy scalars / tuples / dataclass-ish values to JSON types."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and obj != obj:  # NaN is not valid JSON here
        return None
    return obj


def write_json(path, payload: dict) -> None:
    payload = _jsonable(payload)
    validate_payload(payload)
    with open(path, "w") as fh:
        fh.write(canonical_json(payload))


def write_csv(path, header, rows) -> None:
    """One row per record; an empty run still yields a valid header-only table."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([row.get(h, "") if isinstance(row, dict) else row[i]
                        for i, h in enumerate(header)])


# ---------------------------------------------------------------------------
# figures (report path renders alongside the delimited output)
# ---------------------------------------------------------------------------

def rate_figure(path, per_seed, thresholds) -> None:
    """Log-log error curves per object with fitted slopes."""
    objects = sorted({row["object"] for rec in per_seed for row in rec["rows"]})
    if not objects:
        return
    fig, axes = plt.subplots(1, len(objects), figsize=(4.2 * len(objects), 3.4),
                             squeeze=False)
    for ax, name in zip(axes[0], objects):
        slopes = []
        for rec in per_seed:
            rows = [r for r in rec["rows"] if r["object"] == name]
            if not rows:
                continue
            eps = [r["eps"] for r in rows]
            err = [r["error"] for r in rows]
            ax.loglog(eps, err, "o-", alpha=0.6, ms=3, lw=0.8)
            fit = rec["fits"].get(name)
            if fit is not None:
                slopes.append(fit.slope)
        label = f"median slope {float(np.median(slopes)):.3f}" if slopes else "no fits"
        ax.set_title(f"{name}: {label}\nrequired >= {thresholds[name]:.3f}")
        ax.set_xlabel("eps")
        ax.set_ylabel("error vs finest-eps reference")
        ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def ensemble_figure(path, measured, lam) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.hist(measured, bins=max(8, len(measured) // 8), color="steelblue", alpha=0.8)
    ax.axvline(lam, color="crimson", ls="--", label=f"Lambda = {lam:.3g}")
    ax.set_xlabel("gate statistic")
    ax.set_ylabel("count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def renorm_figure(path, rows) -> None:
    """Identity error and zeta norm against eps."""
    if not rows:
        return
    eps = [r["eps"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.4))
    ax1.loglog(eps, [max(r["direct_vs_renorm_relerr"], 1e-18) for r in rows], "o-",
               label="direct vs renormalized")
    ax1.loglog(eps, [max(r["shift_invariance_err"], 1e-18) for r in rows], "s-",
               label="shift invariance")
    ax1.set_xlabel("eps")
    ax1.set_ylabel("relative error")
    ax1.legend(fontsize=8)
    ax1.grid(True, which="both", alpha=0.3)
    ax2.semilogx(eps, [r["zeta_norm_1mk"] for r in rows], "o-")
    ax2.set_xlabel("eps")
    ax2.set_ylabel("estimated |zeta|_{1-kappa}")
    ax2.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def convergence_figure(path, increment_history) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogy(range(1, len(increment_history) + 1), increment_history, "o-")
    ax.set_xlabel("iteration")
    ax.set_ylabel("sup-norm increment")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
