import cvxpy as cp
import pytest
from pydantic import ValidationError

from pymjnn import Settings


def test_settings_defaults():
    settings = Settings()

    assert settings.eps == 1e-7
    assert settings.tol == 1e-7
    assert settings.lyapunov_mode == "vertex"
    assert settings.ccl_max_iters == 50
    assert settings.seed == 0
    assert settings.workers == 1
    assert settings.solvers
    assert set(settings.solvers) <= set(cp.installed_solvers())


def test_settings_from_env(monkeypatch):
    monkeypatch.setenv("PYMJNN_EPS", "1e-8")
    monkeypatch.setenv("PYMJNN_CCL_MAX_ITERS", "100")
    monkeypatch.setenv("PYMJNN_LYAPUNOV_MODE", "averaged")
    monkeypatch.setenv("PYMJNN_LITERAL_EXPONENT", "True")

    settings = Settings()

    assert settings.eps == 1e-8
    assert settings.ccl_max_iters == 100
    assert settings.lyapunov_mode == "averaged"
    assert settings.literal_exponent is True


def test_settings_from_env_file(tmp_path):
    env = tmp_path / ".env"
    env.write_text('PYMJNN_SEED="7"\nPYMJNN_WORKERS="2"\n')

    settings = Settings(_env_file=env)

    assert settings.seed == 7
    assert settings.workers == 2


def test_settings_arguments_override_env(monkeypatch):
    monkeypatch.setenv("PYMJNN_SEED", "7")

    assert Settings(seed=3).seed == 3


@pytest.mark.parametrize(
    ("field", "value"),
    [
        ("eps", 0.0),
        ("tol", -1.0),
        ("ccl_max_iters", 0),
        ("lyapunov_mode", "exact"),
        ("seed", -1),
        ("workers", 0),
        ("solvers", []),
    ],
)
def test_settings_invalid(field, value):
    with pytest.raises(ValidationError):
        Settings(**{field: value})


def test_settings_extra_forbidden():
    with pytest.raises(ValidationError):
        Settings(v1_client_id="x")


def test_settings_solvers_uppercased():
    installed = cp.installed_solvers()

    settings = Settings(solvers=[installed[0].lower()])

    assert settings.solvers == [installed[0]]


def test_settings_solvers_not_installed():
    with pytest.raises(ValidationError, match="None of the solvers"):
        Settings(solvers=["NOT_A_SOLVER"])


def test_settings_solvers_partially_installed():
    installed = cp.installed_solvers()

    with pytest.warns(UserWarning, match="will be skipped"):
        settings = Settings(solvers=["NOT_A_SOLVER", installed[0]])

    assert settings.solvers == [installed[0]]
