"""Time-series persistence: one CSV row per diagnostics record.

Values are written with 17 significant digits so the decimal text
round-trips 64-bit floats exactly.
"""

from qel.diagnostics import DiagnosticsRecord

HEADER = ("t,Q,Qdiag,C,sigma,a_lam,b_lam,Q_lam,C_lam,b,mu,rho,Rprof,"
          "delta_jet,eps_strain,eta_ext,E,r_star,lambda")

_COLUMNS = ("t", "Q", "Qdiag", "C", "sigma", "a_lam", "b_lam", "Q_lam",
            "C_lam", "b", "mu", "rho", "Rprof", "delta_jet", "eps_strain",
            "eta_ext", "E", "r_star", "lam")


def write_series(records, path):
    if not records:
        raise ValueError("refusing to write an empty series")
    with open(path, "w", newline="") as fh:
        fh.write(HEADER + "\n")
        for rec in records:
            fh.write(",".join(f"{getattr(rec, col):.17g}" for col in _COLUMNS))
            fh.write("\n")


def read_series(path):
    records = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != HEADER:
            raise ValueError(f"{path}: unexpected series header")
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            vals = [float(tok) for tok in line.split(",")]
            if len(vals) != len(_COLUMNS):
                raise ValueError(f"{path}: malformed row: {line}")
            records.append(DiagnosticsRecord(**dict(zip(_COLUMNS, vals))))
    return records
