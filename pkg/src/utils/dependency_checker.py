#!/usr/bin/env python3
"""
Dependency Checker

Checks that the numerical stack is importable before an experiment runs and
formats installation instructions for whatever is missing.
"""

import importlib
import logging
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)


class DependencyStatus(Enum):
    """Status of a dependency."""
    INSTALLED = "installed"
    NOT_INSTALLED = "not_installed"


class Dependency:
    """A Python package the experiments need."""

    def __init__(
        self,
        name: str,
        import_name: str,
        pip_package: Optional[str] = None,
        description: str = "",
        is_optional: bool = False,
        check_function: Optional[Callable[[], bool]] = None
    ):
        """
        Args:
            name: Human-readable name
            import_name: Module to import (e.g. 'yaml')
            pip_package: PyPI name when it differs from ``import_name``
            description: What the package is used for
            is_optional: Missing optional packages only disable features
            check_function: Custom availability check
        """
        self.name = name
        self.import_name = import_name
        self.pip_package = pip_package or import_name
        self.description = description
        self.is_optional = is_optional
        self.check_function = check_function
        self.status = DependencyStatus.NOT_INSTALLED
        self.version: Optional[str] = None
        self.error_message: Optional[str] = None

    @property
    def install_instructions(self) -> str:
        return f"pip install {self.pip_package}"


class DependencyChecker:
    """Checks the packages in ``requirements.txt`` that the library imports."""

    def __init__(self, dependencies: Optional[List[Dependency]] = None):
        self.dependencies = dependencies if dependencies is not None else self._initialize_dependencies()

    def _initialize_dependencies(self) -> List[Dependency]:
        return [
            Dependency("NumPy", "numpy", description="Datasets, ground-truth forces, RK4 and CSV output"),
            Dependency("PyTorch", "torch", description="Exact derivatives and network training (float64, CPU)"),
            Dependency("SciPy", "scipy", description="Nelder-Mead fits of the symbolic force templates"),
            Dependency("PyYAML", "yaml", pip_package="PyYAML", description="YAML experiment configs",
                       is_optional=True),
        ]

    def check_all(self) -> Dict[str, Any]:
        """
        Check every dependency.

        Returns:
            {
                'all_installed': bool,
                'required_installed': bool,
                'missing_required': List[Dependency],
                'missing_optional': List[Dependency],
                'details': List[Dict]
            }
        """
        missing_required = []
        missing_optional = []

        for dep in self.dependencies:
            dep.status = self._check_dependency(dep)
            if dep.status is DependencyStatus.NOT_INSTALLED:
                (missing_optional if dep.is_optional else missing_required).append(dep)

        return {
            'all_installed': not missing_required and not missing_optional,
            'required_installed': not missing_required,
            'missing_required': missing_required,
            'missing_optional': missing_optional,
            'details': [self._get_dep_info(dep) for dep in self.dependencies],
        }

    def _check_dependency(self, dep: Dependency) -> DependencyStatus:
        if dep.check_function:
            try:
                return DependencyStatus.INSTALLED if dep.check_function() else DependencyStatus.NOT_INSTALLED
            except Exception as e:
                dep.error_message = str(e)
                return DependencyStatus.NOT_INSTALLED

        try:
            module = importlib.import_module(dep.import_name)
        except ImportError as e:
            dep.error_message = str(e)
            logger.debug("Dependency %s not importable: %s", dep.name, e)
            return DependencyStatus.NOT_INSTALLED
        dep.version = getattr(module, '__version__', None)
        return DependencyStatus.INSTALLED

    def _get_dep_info(self, dep: Dependency) -> Dict:
        return {
            'name': dep.name,
            'status': dep.status.value,
            'version': dep.version,
            'description': dep.description,
            'install_instructions': dep.install_instructions,
            'pip_package': dep.pip_package,
            'is_optional': dep.is_optional,
            'error': dep.error_message,
        }

    def get_install_instructions(self, missing: List[Dependency]) -> str:
        """One-line pip command plus what each missing package is for."""
        if not missing:
            return ""
        lines = [f"pip install {' '.join(dep.pip_package for dep in missing)}"]
        lines.extend(f"  {dep.name}: {dep.description}" for dep in missing)
        return "\n".join(lines)


def check_dependencies() -> Dict[str, Any]:
    """Check all dependencies and return status."""
    return DependencyChecker().check_all()
