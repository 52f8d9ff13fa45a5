"""Covariant quantum mechanics workbench.

Load a scenario file and call its operations::

    import cqm
    s = cqm.Scenario.load("scenarios/harmonic.json")
    levels, residuals, states = s.spectrum(5)
"""

from ._cqm import ConfigError, Error, Scenario, fnv1a

__all__ = ["ConfigError", "Error", "Scenario", "fnv1a", "run"]


def run(path, out_dir, tolerance_profile="strict", k=None, validate_only=False):
    """Run every task of a scenario file, as `cqm run` does. Returns the report dict."""
    return Scenario.load(str(path)).run(str(out_dir), tolerance_profile, k, validate_only)
