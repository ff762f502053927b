import pytest
from pydantic import ValidationError

from utils.config import Settings, get_settings, load_settings, override_settings, use_settings


def test_defaults():
    settings = Settings()
    assert settings.dt == 1e-3
    assert settings.exp_dt == 1e-2
    assert settings.tol_perfect == 1e-9
    assert settings.digits == 9 and settings.full_digits == 17
    assert settings.log_level == "WARNING"


def test_layer_precedence(monkeypatch, tmp_path):
    monkeypatch.setenv("SOL_DT", "0.002")
    monkeypatch.setenv("SOL_SEED", "7")
    monkeypatch.setenv("SOL_UNRELATED", "ignored")
    assert load_settings().dt == 0.002

    config = tmp_path / "solgeo.cfg"
    config.write_text("dt=0.004\ntol-perfect=1e-8\n", encoding="utf-8")
    from_file = load_settings(str(config))
    assert from_file.dt == 0.004
    assert from_file.tol_perfect == 1e-8
    assert from_file.seed == 7

    explicit = load_settings(str(config), {"dt": 0.008, "seed": None})
    assert explicit.dt == 0.008
    assert explicit.seed == 7


def test_bad_configuration(tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("dt=0.01\nstep_size=2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="step_size"):
        load_settings(str(config))
    with pytest.raises(FileNotFoundError):
        load_settings(str(tmp_path / "missing.cfg"))


@pytest.mark.parametrize("values", [{"dt": 0.0}, {"tol_perfect": -1e-9}, {"digits": 30}, {"log_level": "LOUD"}])
def test_validation(values):
    with pytest.raises(ValidationError):
        Settings(**values)


def test_log_level_is_normalised():
    assert Settings(log_level="debug").log_level == "DEBUG"


def test_installed_settings_and_overrides():
    installed = Settings(dt=0.5)
    use_settings(installed)
    assert get_settings() is installed
    with override_settings(tol_perfect=1e-6) as inner:
        assert inner.tol_perfect == 1e-6
        assert inner.dt == 0.5
        assert get_settings() is inner
    assert get_settings() is installed
    use_settings(None)
    assert get_settings() is not installed
