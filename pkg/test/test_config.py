# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# test/test_config.py
import pytest

from stqlearn import config


def test_attr_dict():
    d = config.attr_dict({'a': 1, 'b': 2})
    assert d.__class__.__bases__ == (dict,)
    assert d.a == 1
    assert d.b == 2
    assert d['a'] == 1
    assert d['b'] == 2
    d.c = 3
    assert d['c'] == 3
    with pytest.raises(AttributeError):
        d.missing


def test_configuration_error_is_value_error():
    # Callers that only know about ValueError still catch bad settings
    with pytest.raises(ValueError):
        raise config.ConfigurationError('bad')


def test_defaults_sane():
    assert 0 < config.DEFAULT_DECAY <= 1
    assert config.OMEGA_MAX == 15
    assert config.DEFAULT_ALPHA > 0
    assert config.RICCATI_TOL < config.DEFAULT_EPS_K


if __name__ == '__main__':
    raise SystemExit("Attention! Run with pytest")
