import pytest

from modules.activation import LOGISTIC, TANH
from modules.kernel import build_kernel
from modules.measure import QuadraturePlan, jacobi, lebesgue

JACOBI_HALF = [0.5, 0.5, 0.5, 0.5]


# small enough for index-by-index reference integrals
@pytest.fixture(scope="session")
def coarse_plan():
    return QuadraturePlan(panels_per_axis=16, nodes_per_panel=8)


@pytest.fixture(scope="session")
def logistic_kernel():
    return build_kernel(LOGISTIC)


@pytest.fixture(scope="session")
def tanh_kernel():
    return build_kernel(TANH)


@pytest.fixture(scope="session", params=["logistic", "tanh"])
def kernel(request, logistic_kernel, tanh_kernel):
    return {"logistic": logistic_kernel, "tanh": tanh_kernel}[request.param]


@pytest.fixture(scope="session")
def lebesgue_1d():
    return lebesgue(1)


@pytest.fixture(scope="session")
def lebesgue_2d():
    return lebesgue(2)


@pytest.fixture(scope="session")
def jacobi_1d():
    return jacobi(1, [0.5, 0.5])


@pytest.fixture(scope="session")
def jacobi_2d():
    return jacobi(2, JACOBI_HALF)


@pytest.fixture(scope="session", params=["lebesgue", "jacobi"])
def measure_2d(request, lebesgue_2d, jacobi_2d):
    return {"lebesgue": lebesgue_2d, "jacobi": jacobi_2d}[request.param]
