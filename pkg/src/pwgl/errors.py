"""Error types shared across the package.

The CLI maps these to exit codes: ConfigError -> 2, DataError -> 3,
SolverError -> 4.
"""


class PwglError(Exception):
    """Base class for package errors."""


class ConfigError(PwglError):
    """Invalid or inconsistent configuration."""


class DataError(PwglError):
    """Malformed input data (point clouds, graph files, IDX files)."""


class SolverError(PwglError):
    """Linear solve failed or was refused."""


class UnlabeledComponentError(SolverError):
    """The graph has a connected component containing no labeled node."""

    def __init__(self, component_sizes):
        self.component_sizes = list(component_sizes)
        sizes = ", ".join(str(s) for s in self.component_sizes)
        super().__init__(
            f"graph has {len(self.component_sizes)} connected component(s) "
            f"without a labeled node (sizes: {sizes}); solution is not "
            "determined there"
        )


class NonConvergenceError(SolverError):
    """Iterative solver exhausted its iteration budget."""

    def __init__(self, iterations, residual, history):
        self.iterations = iterations
        self.residual = residual
        self.history = list(history)
        super().__init__(
            f"conjugate gradient did not reach tolerance after "
            f"{iterations} iterations (relative residual {residual:.3e})"
        )
