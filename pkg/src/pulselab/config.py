"""Run configuration: INI-style file with fail-closed validation.

Sections mirror the lab notebook tables: ``[system.I]`` and
``[system.II]`` carry grid/energy/spot parameters with unit suffixes in
the key names, ``[ga]`` the optimizer settings, ``[scan]`` the landscape
ranges, and optional ``[substrate.<name>]`` sections override registry
entries.  Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, replace

from .fragmentation import SubstrateSpec, load_registry
from .ga import GAConfig
from .lab import LaserSystemSpec, system_i_spec, system_ii_spec
from .pulses import SpectralGrid


class ConfigError(ValueError):
    """Malformed configuration: unknown key, bad value, missing section."""


_SYSTEM_KEYS = {
    "pixel_count",
    "center_pixel",
    "center_wavelength_nm",
    "nm_per_pixel",
    "bandwidth_fwhm_nm",
    "delivered_energy_uJ",
    "spot_radius_um",
    "intensity_scale",
    "residual_phase_seed",
    "residual_magnitude_fs2",
    "residual_magnitude_fs3",
    "residual_magnitude_fs4",
}

_GA_KEYS = {
    "population",
    "generations",
    "crossover_rate",
    "mutation_rate",
    "elite_count",
    "seed",
    "a_bound_fs2",
    "b_bound_fs3",
    "c_bound_fs4",
}

_SCAN_KEYS = {"a_min_fs2", "a_max_fs2", "b_min_fs3", "b_max_fs3", "n_a", "n_b"}

# Substrate overrides: any numeric field of SubstrateSpec.
_SUBSTRATE_KEYS = {
    "sequencing_weight",
    "preferred_sequencing",
    "sequencing_window",
    "preferred_stretch_fs",
    "stretch_ln_width",
    "resonance_floor_short",
    "resonance_floor_long",
    "ionization_scale_TWcm2",
    "coulomb_threshold_TWcm2",
    "coulomb_gain",
    "k1",
    "k2",
    "s2_threshold",
    "depletion_amp_s1",
    "depletion_amp_s2",
    "depletion_center_TWcm2",
    "depletion_ln_width",
    "split_coeff_us",
}


@dataclass(frozen=True)
class RunConfig:
    systems: dict
    ga: GAConfig
    scan_a_range: tuple[float, float]
    scan_b_range: tuple[float, float]
    scan_n: tuple[int, int]
    registry: dict
    digest: str


def default_config_text() -> str:
    return """# pulselab run configuration
[system.I]
pixel_count = 640
center_pixel = 320
center_wavelength_nm = 800.0
nm_per_pixel = 0.155
bandwidth_fwhm_nm = 57.5
delivered_energy_uJ = 375.0
spot_radius_um = 20.0
intensity_scale = 1.0
residual_phase_seed = 101
residual_magnitude_fs2 = 0.0
residual_magnitude_fs3 = 2.0e4
residual_magnitude_fs4 = 2.0e5

[system.II]
pixel_count = 640
center_pixel = 320
center_wavelength_nm = 791.0
nm_per_pixel = 0.179
bandwidth_fwhm_nm = 51.5
delivered_energy_uJ = 355.0
spot_radius_um = 22.5
intensity_scale = 0.5
residual_phase_seed = 202
residual_magnitude_fs2 = 0.0
residual_magnitude_fs3 = 2.0e4
residual_magnitude_fs4 = 2.0e5

[ga]
population = 40
generations = 60
crossover_rate = 0.8
mutation_rate = 0.2
elite_count = 2
seed = 0
a_bound_fs2 = 2.0e4
b_bound_fs3 = 4.0e5
c_bound_fs4 = 1.0e6

[scan]
a_min_fs2 = -2.0e4
a_max_fs2 = 2.0e4
b_min_fs3 = -4.0e5
b_max_fs3 = 4.0e5
n_a = 41
n_b = 41
"""


def _check_keys(section: str, keys, allowed) -> None:
    unknown = set(keys) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")


def _system_from_section(name: str, sec) -> LaserSystemSpec:
    _check_keys(f"system.{name}", sec.keys(), _SYSTEM_KEYS)
    try:
        grid = SpectralGrid(
            int(sec["pixel_count"]),
            int(sec["center_pixel"]),
            float(sec["center_wavelength_nm"]),
            float(sec["nm_per_pixel"]),
        )
        return LaserSystemSpec(
            name=name,
            grid=grid,
            bandwidth_fwhm_nm=float(sec["bandwidth_fwhm_nm"]),
            delivered_energy_uJ=float(sec["delivered_energy_uJ"]),
            spot_radius_um=float(sec["spot_radius_um"]),
            intensity_scale=float(sec["intensity_scale"]),
            residual_phase_seed=int(sec["residual_phase_seed"]),
            residual_magnitude=(
                float(sec["residual_magnitude_fs2"]),
                float(sec["residual_magnitude_fs3"]),
                float(sec["residual_magnitude_fs4"]),
            ),
        )
    except KeyError as exc:
        raise ConfigError(f"missing key {exc} in [system.{name}]") from exc
    except ValueError as exc:
        raise ConfigError(f"bad value in [system.{name}]: {exc}") from exc


def load_config(path=None, registry_path=None) -> RunConfig:
    """Parse and validate a config file; None loads the packaged defaults."""
    text = default_config_text() if path is None else open(path).read()
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    known = {"ga", "scan"}
    systems = {}
    registry = load_registry(registry_path)
    for section in parser.sections():
        if section.startswith("system."):
            name = section.split(".", 1)[1]
            systems[name] = _system_from_section(name, parser[section])
        elif section.startswith("substrate."):
            name = section.split(".", 1)[1]
            if name not in registry:
                raise ConfigError(f"substrate override for unknown compound {name!r}")
            _check_keys(section, parser[section].keys(), _SUBSTRATE_KEYS)
            overrides = {k: float(v) for k, v in parser[section].items()}
            registry[name] = replace(registry[name], **overrides)
        elif section not in known:
            raise ConfigError(f"unknown section [{section}]")

    if not systems:
        raise ConfigError("config defines no [system.*] sections")

    ga = GAConfig()
    if parser.has_section("ga"):
        sec = parser["ga"]
        _check_keys("ga", sec.keys(), _GA_KEYS)
        bounds = list(ga.bounds)
        for i, key in enumerate(("a_bound_fs2", "b_bound_fs3", "c_bound_fs4")):
            if key in sec:
                b = abs(float(sec[key]))
                bounds[i] = (-b, b)
        ga = GAConfig(
            population=sec.getint("population", ga.population),
            generations=sec.getint("generations", ga.generations),
            crossover_rate=sec.getfloat("crossover_rate", ga.crossover_rate),
            mutation_rate=sec.getfloat("mutation_rate", ga.mutation_rate),
            elite_count=sec.getint("elite_count", ga.elite_count),
            bounds=tuple(bounds),
            seed=sec.getint("seed", ga.seed),
        )

    a_range, b_range, n = (-2.0e4, 2.0e4), (-4.0e5, 4.0e5), (41, 41)
    if parser.has_section("scan"):
        sec = parser["scan"]
        _check_keys("scan", sec.keys(), _SCAN_KEYS)
        a_range = (sec.getfloat("a_min_fs2", a_range[0]), sec.getfloat("a_max_fs2", a_range[1]))
        b_range = (sec.getfloat("b_min_fs3", b_range[0]), sec.getfloat("b_max_fs3", b_range[1]))
        n = (sec.getint("n_a", n[0]), sec.getint("n_b", n[1]))

    digest = hashlib.sha256(text.encode()).hexdigest()
    return RunConfig(systems, ga, a_range, b_range, n, registry, digest)
