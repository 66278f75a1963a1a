"""Configuration management for tolerances, seeds and sampling sizes."""

from pathlib import Path
from typing import Dict, Optional

import yaml

from .utils import expand_path


class ConfigError(Exception):
    """Error reading or validating a configuration file."""
    pass


def _pick(value, default):
    return default if value is None else value


class Config:
    """Configuration for verification runs."""

    DEFAULT_SEED = 0
    DEFAULT_TOL = 1e-6
    DEFAULT_RESTARTS = 24
    DEFAULT_FD_STEP = 1e-4
    DEFAULT_KERNEL_TOL = 1e-8
    DEFAULT_CONTACT_TOL = 1e-6
    DEFAULT_SAMPLE_PLANES = 1_000_000
    DEFAULT_SAMPLES = 100
    DEFAULT_COVECTORS = 1000
    DEFAULT_QUADRATURE = 8
    DEFAULT_WORKERS = 1

    # key -> accepted python types
    FIELDS = {
        'seed': (int,),
        'tol': (int, float),
        'restarts': (int,),
        'fd_step': (int, float),
        'kernel_tol': (int, float),
        'contact_tol': (int, float),
        'sample_planes': (int,),
        'samples': (int,),
        'covectors': (int,),
        'quadrature': (int,),
        'workers': (int,),
        'report': (str,),
    }

    def __init__(
        self,
        seed: Optional[int] = None,
        tol: Optional[float] = None,
        restarts: Optional[int] = None,
        fd_step: Optional[float] = None,
        kernel_tol: Optional[float] = None,
        contact_tol: Optional[float] = None,
        sample_planes: Optional[int] = None,
        samples: Optional[int] = None,
        covectors: Optional[int] = None,
        quadrature: Optional[int] = None,
        workers: Optional[int] = None,
        report: Optional[str] = None,
    ):
        """
        Initialize configuration.

        Args:
            seed: Global random seed (defaults to 0)
            tol: Acceptance tolerance for optimizer results (defaults to 1e-6)
            restarts: Multi-start count for comass estimation (defaults to 24)
            fd_step: Finite-difference step for chart calculus (defaults to 1e-4)
            kernel_tol: Relative singular-value cut for kernels (defaults to 1e-8)
            contact_tol: Tolerance of the contact test (defaults to 1e-6)
            sample_planes: Random planes used for the sampled comass bound
            samples: Sample points for pointwise candidate verification
            covectors: Random covectors for symbol checks
            quadrature: Gauss-Legendre nodes per patch direction
            workers: Worker processes for run-all (defaults to 1)
            report: Optional path of the line-delimited report file
        """
        self.seed = int(_pick(seed, self.DEFAULT_SEED))
        self.tol = float(_pick(tol, self.DEFAULT_TOL))
        self.restarts = int(_pick(restarts, self.DEFAULT_RESTARTS))
        self.fd_step = float(_pick(fd_step, self.DEFAULT_FD_STEP))
        self.kernel_tol = float(_pick(kernel_tol, self.DEFAULT_KERNEL_TOL))
        self.contact_tol = float(_pick(contact_tol, self.DEFAULT_CONTACT_TOL))
        self.sample_planes = int(_pick(sample_planes, self.DEFAULT_SAMPLE_PLANES))
        self.samples = int(_pick(samples, self.DEFAULT_SAMPLES))
        self.covectors = int(_pick(covectors, self.DEFAULT_COVECTORS))
        self.quadrature = int(_pick(quadrature, self.DEFAULT_QUADRATURE))
        self.workers = int(_pick(workers, self.DEFAULT_WORKERS))
        self.report_path: Optional[Path] = expand_path(report) if report else None

        if self.tol <= 0 or self.fd_step <= 0 or self.kernel_tol <= 0 or self.contact_tol <= 0:
            raise ConfigError("Tolerances and steps must be positive numbers")
        if min(self.restarts, self.sample_planes, self.samples, self.covectors, self.quadrature, self.workers) < 1:
            raise ConfigError("Counts must be positive integers")

    @classmethod
    def from_file(cls, config_file: Path, **overrides) -> "Config":
        """
        Build a configuration from a YAML file, with keyword overrides on top.

        Args:
            config_file: Path to the YAML document
            **overrides: Values that win over the file (None entries are ignored)

        Returns:
            Config instance

        Raises:
            ConfigError: If the file is missing or invalid
        """
        data = load_config_file(config_file)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def as_dict(self) -> Dict:
        """Return the settings that influence results (the report path excluded)."""
        return {
            'seed': self.seed,
            'tol': self.tol,
            'restarts': self.restarts,
            'fd_step': self.fd_step,
            'kernel_tol': self.kernel_tol,
            'contact_tol': self.contact_tol,
            'sample_planes': self.sample_planes,
            'samples': self.samples,
            'covectors': self.covectors,
            'quadrature': self.quadrature,
        }


def load_config_file(config_file: Path) -> Dict:
    """
    Load and validate a YAML configuration document.

    Args:
        config_file: Path to the YAML file

    Returns:
        Dictionary of validated settings

    Raises:
        ConfigError: If the file is missing, not YAML, not a mapping, or has bad values
    """
    config_file = Path(config_file)
    if not config_file.exists():
        raise ConfigError(f"Config file not found: {config_file}")

    try:
        with open(config_file, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid YAML in config file: {e}")
    except Exception as e:
        raise ConfigError(f"Error reading config file: {e}")

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("Config file must contain a YAML dictionary")

    for key, value in data.items():
        if key not in Config.FIELDS:
            raise ConfigError(f"Unknown config key '{key}'. Known keys: {', '.join(sorted(Config.FIELDS))}")
        accepted = Config.FIELDS[key]
        # bool is an int subclass; reject it explicitly
        if isinstance(value, bool) or not isinstance(value, accepted):
            raise ConfigError(f"'{key}' must be of type {accepted[-1].__name__}")

    return data
