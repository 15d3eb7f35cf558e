"""Exception types shared across the solver modules."""


class ValidationError(ValueError):
    """Raised when an input violates a documented invariant.

    ``path`` names the offending field (``customers[1].nominal_energy``) so
    errors in JSON documents can be located.
    """

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class InfeasibleDuration(Exception):
    """The minimum rent duration already violates the energy budget."""


class EnergyBudgetViolation(ValueError):
    """A decision consumes more transmission energy than the realized budget."""


class NoFeasibleSelection(Exception):
    """Every model selection is excluded by feasibility cuts."""


class IterationLimit(Exception):
    """C&CG stopped at ``max_iter`` before closing the gap.

    The final :class:`~lmaas_pricing.rsr.CcgState` is attached; its bounds
    remain valid certificates.
    """

    def __init__(self, state, result=None):
        self.state = state
        self.result = result
        super().__init__(
            f"iteration limit reached after {state.iteration} iterations "
            f"(lb={state.lb}, ub={state.ub})"
        )
