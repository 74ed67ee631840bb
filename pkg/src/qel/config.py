"""Run configuration: defaults, plain-text config files, flag overrides.

The format is diffable sectioned key-value text, one `section.key = value`
per line, `#` comments.  Precedence: built-in defaults < config file <
command-line flags.  Every resolved run writes a manifest capturing the full
configuration and the code version.
"""

import dataclasses
import os
import time
from dataclasses import dataclass

import qel
from qel.fields import MeridionalGrid
from qel.initial_data import DataParameters


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # explicit datum
    data_r0: float = 1.0
    data_lambda0: float = 0.05
    data_a0: float = 20.0
    data_gamma_star0: float = 1.0
    data_a_b: float = 64.0
    data_epsilon0: float = 0.05
    data_kappa: float = 0.125
    # grid (centered at r0, square half-width)
    grid_half_width: float = 0.7
    grid_n_r: int = 257
    grid_n_z: int = 257
    # time stepping
    time_dt_max: float = 8e-4
    time_t_final: float = 40.0
    time_record_interval: int = 1
    time_sigma_t_cap: float = 0.5
    time_sigma_dt_cap: float = 0.1
    time_cfl: float = 0.5
    # solver and diagnostics tolerances
    solver_recovery_tol: float = 1e-9
    solver_e_cap: float = 1.0
    solver_delta_c: float = 0.05
    solver_split_factor: float = 4.0
    # comparison ODE
    ode_c: float = 1.0
    ode_kappa: float = 1.0
    ode_q0: float = 1.0
    ode_c0: float = 1.0
    ode_t_max: float = 10.0
    ode_rtol: float = 1e-10
    ode_system: str = "coupled"
    # output
    output_dir: str = "qel-out"
    output_seed: int = 12345

    @staticmethod
    def _field_key(name):
        return name.replace("_", ".", 1)

    @classmethod
    def keys(cls):
        return [cls._field_key(f.name) for f in dataclasses.fields(cls)]

    @classmethod
    def from_layers(cls, path=None, overrides=None):
        """defaults < file < overrides (dotted-key dict)."""
        cfg = cls()
        if path:
            cfg._apply(parse_config_file(path), source=path)
        if overrides:
            cfg._apply(overrides, source="flags")
        if "QEL_OUTPUT_DIR" in os.environ:
            cfg.output_dir = os.environ["QEL_OUTPUT_DIR"]
        return cfg

    def _apply(self, mapping, source):
        valid = {self._field_key(f.name): f for f in dataclasses.fields(self)}
        for key, value in mapping.items():
            if key not in valid:
                raise ConfigError(f"{source}: unknown configuration key {key!r}")
            f = valid[key]
            try:
                setattr(self, f.name, _coerce(value, f))
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key}: {exc}") from exc

    # derived objects -------------------------------------------------------

    def data_parameters(self) -> DataParameters:
        return DataParameters(r0=self.data_r0, lambda0=self.data_lambda0,
                              a0=self.data_a0, Gamma_star0=self.data_gamma_star0,
                              A_b=self.data_a_b, epsilon0=self.data_epsilon0,
                              kappa=self.data_kappa)

    def grid(self) -> MeridionalGrid:
        h = self.grid_half_width
        return MeridionalGrid(self.data_r0 - h, self.data_r0 + h, -h, h,
                              self.grid_n_r, self.grid_n_z)

    def to_mapping(self):
        return {self._field_key(f.name): getattr(self, f.name)
                for f in dataclasses.fields(self)}

    def write_manifest(self, path, extra=None):
        with open(path, "w") as fh:
            fh.write(f"# qel run manifest\nversion = {qel.__version__}\n")
            fh.write(f"created = {time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
            for key, value in self.to_mapping().items():
                fh.write(f"{key} = {value}\n")
            for key, value in (extra or {}).items():
                fh.write(f"{key} = {value}\n")


def _coerce(value, field_obj):
    target = field_obj.type
    if isinstance(value, str):
        value = value.strip()
    if target in ("int", int):
        return int(value)
    if target in ("float", float):
        return float(value)
    return str(value)


def parse_config_file(path):
    mapping = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'section.key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            mapping[key] = value
    return mapping
