"""凸过程、类 𝒱 函数与 Lyapunov 验证"""

from .functions import (
    ConeFunction,
    ConjugateOf,
    PosDefBounds,
    PosDefRefutation,
    QuadOnCone,
    RestrictedTo,
    ScaledDistSq,
    check_theorem1_transfer,
    conjugate,
    evaluate,
    function_from_dict,
    infimal_convolution,
    minimize_over,
    posdef_bounds,
    restrict,
)
from .lyapunov import (
    MODES,
    LyapunovQuery,
    SamplingSpec,
    check_rint_condition,
    check_theorem2,
    check_theorem3,
    dual_candidate,
    gamma_search,
    verify,
)
from .process import ConvexProcess, FeasibleSetResult, LinearProcess, feasible_linear, reachable_linear
from .simulate import POLICIES, Trajectory, simulate
from .verdict import VerificationReport, Verdict
