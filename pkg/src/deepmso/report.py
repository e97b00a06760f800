"""Trace and summary artifacts written by the command line tool."""
import json

import numpy as np

from deepmso.sim import lyapunov_diagnostic, tracking_metrics

TRACE_COLUMNS = (
    "t,q1,q2,q1dot,q2dot,q1d,q2d,q1dotd,q2dotd,q1hat,q2hat,q1dothat,q2dothat,"
    "u1,u2,er1,er2,er3,er4,ea1,ea2,ea3,ea4,loss,ftilde_norm"
).split(",")


def trace_array(log):
    # adding 0.0 turns -0.0 into 0.0 so the CSV never prints "-0"
    return 0.0 + np.column_stack([
        log.t, log.x, log.x_d, log.x_hat, log.u, log.e_r, log.e_a, log.loss, log.ftilde_norm,
    ])


def write_trace(log, path):
    np.savetxt(path, trace_array(log), fmt="%.9g", delimiter=",",
               header=",".join(TRACE_COLUMNS), comments="", encoding="utf-8")


def read_trace(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def summarize(log, settle=2.0):
    out = {
        "records": len(log),
        "aborted": log.aborted,
        "abort_reason": log.abort_reason,
    }
    if len(log) and log.t[-1] >= settle:
        with np.errstate(over="ignore", invalid="ignore"):
            out["metrics"] = tracking_metrics(log, settle)
            diag = lyapunov_diagnostic(log, settle)
        diag.pop("ratio_series")
        out["lyapunov"] = diag
    out.update(log.meta)
    return out


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")
