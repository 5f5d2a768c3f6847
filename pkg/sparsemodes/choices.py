class ChoiceSet:
    """
    Base class for a fixed set of string choices.

    Subclasses declare ``CHOICES`` as a list of ``(value, label)`` pairs.
    """

    CHOICES = []

    @classmethod
    def values(cls):
        return [value for value, _ in cls.CHOICES]


class SolveModeChoices(ChoiceSet):
    """Solvers available to the ``solve`` command"""

    MODE_MM = "mm"
    MODE_FULL_MAP = "full-map"
    MODE_L21 = "l21"

    CHOICES = [
        (MODE_MM, "MM / Adaptive Lasso (l2,1/2)"),
        (MODE_FULL_MAP, "Full-MAP alternating optimization"),
        (MODE_L21, "Convex l2,1 group lasso"),
    ]


class ExampleChoices(ChoiceSet):
    """Built-in synthetic designs"""

    EXAMPLE_ASYMMETRIC = "1"
    EXAMPLE_DUPLICATED = "2"

    CHOICES = [
        (EXAMPLE_ASYMMETRIC, "Two correlated column blocks (rho 0.5 / 0.95)"),
        (EXAMPLE_DUPLICATED, "Duplicated 10-column block"),
    ]


class CovarianceTargetChoices(ChoiceSet):
    """Quantities a posterior sample covariance can be computed on"""

    TARGET_COEFFICIENTS = "coefficients"
    TARGET_GROUP_NORMS = "group_norms"

    CHOICES = [
        (TARGET_COEFFICIENTS, "Flattened coefficients"),
        (TARGET_GROUP_NORMS, "Per-location group norms"),
    ]


class RunStatusChoices(ChoiceSet):
    """Completion status recorded in a run manifest"""

    STATUS_COMPLETE = "complete"
    STATUS_INCOMPLETE = "incomplete"

    CHOICES = [
        (STATUS_COMPLETE, "Complete"),
        (STATUS_INCOMPLETE, "Incomplete"),
    ]
