# test_manifest.py
import json

import pytest

from manifest import load_manifest, manifest_from_dict
from models import NoiseSpec
from validators import ManifestError, ValidationError


def garch_manifest(**overrides):
    data = {
        'name': 'garch_discrete',
        'family': 'garch',
        'noise': 'discrete',
        'grid': {'P': [0.01, 0.08], 'r': [1, 8], 'w1': [0.2, 0.6]},
        'fixed': {'w0': 0.001, 'w1_plus_w2': 0.9, 'burn_in': 200},
        'statistics': ['cacf:0.01,0.65@1', 'acf@1', 'acf2@1'],
        'N': 1000,
        'M': 1000,
        'null_burn_in': 2000,
    }
    data.update(overrides)
    return data


class TestManifest:
    def test_grid_points_order(self):
        manifest = manifest_from_dict(garch_manifest())
        points = manifest.grid_points()
        assert len(points) == 8
        assert points[0] == {'P': 0.01, 'r': 1, 'w1': 0.2}
        assert points[1] == {'P': 0.01, 'r': 1, 'w1': 0.6}
        assert points[-1] == {'P': 0.08, 'r': 8, 'w1': 0.6}

    def test_garch_sum_expansion(self):
        manifest = manifest_from_dict(garch_manifest())
        spec = manifest.model_for({'P': 0.01, 'r': 8, 'w1': 0.6})
        assert spec.family == 'garch'
        assert spec.params == {'w0': 0.001, 'burn_in': 200, 'w1': 0.6, 'w2': 0.3}
        assert spec.noise == NoiseSpec.discrete(8, 0.01)

    def test_defaults(self):
        manifest = manifest_from_dict({'family': 'ma1', 'grid': {'theta': [0.5]}, 'statistics': ['acf']})
        assert manifest.noise == 'none'
        assert manifest.name == 'ma1'
        assert manifest.alpha == 0.05
        assert manifest.model_for({'theta': 0.5}).noise == NoiseSpec.none()

    def test_to_dict_keeps_statistic_text(self):
        manifest = manifest_from_dict(garch_manifest())
        assert manifest.to_dict()['statistics'] == ['cacf:0.01,0.65@1', 'acf@1', 'acf2@1']
        assert manifest_from_dict(manifest.to_dict()).to_dict() == manifest.to_dict()

    @pytest.mark.parametrize("overrides", [
        {'family': None},
        {'family': 'bivariate_normal'},
        {'noise': 'cauchy'},
        {'grid': {'theta': 0.5}},
        {'statistics': []},
        {'statistics': ['pacf@1']},
        {'N': 50},
        {'alpha': 1.5},
        {'fixed': {'w0': 0.001, 'w1_plus_w2': 1.2, 'burn_in': 200}},
    ])
    def test_invalid_manifest(self, overrides):
        with pytest.raises(ManifestError):
            manifest_from_dict(garch_manifest(**overrides))

    def test_missing_noise_parameter(self):
        with pytest.raises(ManifestError):
            manifest_from_dict(garch_manifest(grid={'w1': [0.2]}))

    def test_load_manifest(self, write_text):
        path = write_text('grid.json', json.dumps(garch_manifest()))
        assert load_manifest(path).name == 'garch_discrete'

    def test_load_invalid_json(self, write_text):
        path = write_text('broken.json', '{"family": ')
        with pytest.raises(ValidationError):
            load_manifest(path)
