"""
Test Suite for the mpres command line
Run with: pytest tests/test_cli.py -v
"""
import hashlib
import io
import json
import pytest
from pathlib import Path
import sys

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from models.errors import ExitCode
from repositories.config_repository import ConfigRepository
from services.experiment_service import ExperimentService
from services.field_service import FieldService
from services.geometry_service import GeometryService
from services.hamiltonian_service import HamiltonianService
from controllers.cli_controller import CLIController


class CLI:
    """Controller wired against in-memory streams"""

    def __init__(self):
        geometry = GeometryService(max_particles=8)
        field = FieldService(min_bin_count=200)
        hamiltonian = HamiltonianService(geometry, dim_cap=100000, laplacian_diagonal=False)
        self.stdout = io.StringIO()
        self.stderr = io.StringIO()
        self.controller = CLIController(geometry, field, hamiltonian,
                                        ExperimentService(geometry, field, hamiltonian),
                                        ConfigRepository(), self.stdout, self.stderr)

    def __call__(self, *argv):
        self.stdout.seek(0)
        self.stdout.truncate()
        self.stderr.seek(0)
        self.stderr.truncate()
        return self.controller.execute(list(argv))

    def output(self):
        return json.loads(self.stdout.getvalue())

    def error(self):
        return json.loads(self.stderr.getvalue())


@pytest.fixture
def cli():
    return CLI()


def write_config(path: Path, **fields) -> Path:
    path.write_text(json.dumps({'schema_version': 1, **fields}))
    return path


class TestGeomCommands:
    """Test geometry subcommands"""

    def test_dsym(self, cli):
        assert cli('geom', 'dsym', '[[0],[0],[10]]', '[[0],[10],[10]]') == ExitCode.OK
        assert cli.output()['data'] == {'d_S': 10}
        assert cli.output()['exit_code'] == ExitCode.OK
        assert cli.output()['success'] is True

    def test_cluster(self, cli):
        assert cli('geom', 'cluster', '[[0],[1],[10]]', '--R', '2') == ExitCode.OK
        clusters = cli.output()['data']['clusters']
        assert [c['indices'] for c in clusters] == [[1, 2], [3]]

    def test_separate(self, cli):
        assert cli('geom', 'separate', '[[0],[0],[20]]', '[[0],[20],[20]]', '--L', '1', '--verbose') == ExitCode.OK
        data = cli.output()['data']
        cert = data['certificate']
        assert (cert['n1'], cert['n2']) == (2, 1)
        assert cert['Q']['lo'] == [-1] and cert['Q']['hi'] == [1]
        assert len(data['occupancy']) == 2

    def test_separate_without_certificate(self, cli):
        assert cli('geom', 'separate', '[[0],[5]]', '[[0],[5]]', '--L', '1') == ExitCode.OK
        assert cli.output()['data']['certificate'] is None

    def test_width(self, cli):
        assert cli('geom', 'width', '[[0],[10]]') == ExitCode.OK
        assert cli.output()['data'] == {'width': 10}
        assert cli('geom', 'width', '[[0],[10]]', '--cube-L', '2') == ExitCode.OK
        assert cli.output()['data'] == {'width': 6}

    def test_malformed_json(self, cli):
        assert cli('geom', 'dsym', '[[0],', '[[1]]') == ExitCode.INVALID_INPUT
        err = cli.error()
        assert err['success'] is False
        assert err['error_code'] == 'INVALID_INPUT'
        assert err['exit_code'] == ExitCode.INVALID_INPUT

    def test_shape_mismatch(self, cli):
        assert cli('geom', 'dsym', '[[0],[1]]', '[[0]]') == ExitCode.INVALID_INPUT

    @pytest.mark.parametrize('text', ['[[Infinity]]', '[[NaN]]', '[[0.5]]', '[5]', '[["1"]]'])
    def test_non_integer_coordinates(self, cli, text):
        assert cli('geom', 'dsym', text, '[[0]]') == ExitCode.INVALID_INPUT
        assert cli.error()['error_code'] == 'INVALID_INPUT'

    def test_bad_arguments(self, cli):
        assert cli('geom', 'cluster', '[[0]]') == ExitCode.INVALID_INPUT
        assert cli('teleport') == ExitCode.INVALID_INPUT


class TestSpectrumCommand:
    """Test single-cube spectra"""

    def test_spectrum_csv(self, cli, tmp_path):
        cfg = write_config(tmp_path / 'spec.json', experiment='spectrum', u=[[0]], L=1,
                           model={'law': 'gaussian', 'variance': 0.25})
        out = tmp_path / 'out'
        assert cli('spectrum', '--config', str(cfg), '--seed', '3', '--out-dir', str(out),
                   '--export-matrix', '--export-field') == ExitCode.OK
        data = cli.output()['data']
        assert data['dimension'] == 3
        lines = (out / 'spectrum.csv').read_text().splitlines()
        assert lines[0] == 'index,eigenvalue'
        assert len(lines) == 4
        assert (out / 'operator.mtx').exists()
        assert (out / 'field.csv').read_text().splitlines()[0] == 'x1,value'

    def test_same_seed_same_csv(self, cli, tmp_path):
        cfg = write_config(tmp_path / 'spec.json', experiment='spectrum', u=[[0], [4]], L=1)
        for name in ('a', 'b'):
            assert cli('spectrum', '--config', str(cfg), '--seed', '9', '--out-dir', str(tmp_path / name)) == ExitCode.OK
        assert (tmp_path / 'a' / 'spectrum.csv').read_bytes() == (tmp_path / 'b' / 'spectrum.csv').read_bytes()

    def test_dimension_cap(self, cli, tmp_path):
        cfg = write_config(tmp_path / 'big.json', experiment='spectrum',
                           u=[[0, 0], [20, 0], [40, 0]], L=4)
        assert cli('spectrum', '--config', str(cfg)) == ExitCode.RESOURCE_CAP
        assert cli.error()['details']['dimension'] == 9 ** 6
        assert cli.error()['exit_code'] == ExitCode.RESOURCE_CAP

    def test_wrong_experiment(self, cli, tmp_path):
        cfg = write_config(tmp_path / 'w1.json', experiment='w1', u=[[0]], L=1)
        assert cli('spectrum', '--config', str(cfg)) == ExitCode.INVALID_INPUT

    def test_missing_config(self, cli, tmp_path):
        assert cli('spectrum', '--config', str(tmp_path / 'nope.json')) == ExitCode.INVALID_INPUT


class TestRunCommand:
    """Test experiment runs, manifests and reproducibility"""

    @pytest.fixture
    def theorem1_config(self, tmp_path):
        return write_config(tmp_path / 'theorem1.json', experiment='theorem1',
                            u1=[[0], [0]], L1=1, u2=[[20], [20]], L2=1,
                            s_grid=[0.001, 0.01, 0.05, 0.1], trials=40)

    @pytest.mark.parametrize('command,fields', [
        ('theorem1', {'experiment': 'theorem1', 'u1': [[0], [0]], 'L1': 2, 'u2': [[5], [5]], 'L2': 2}),
        ('w2', {'experiment': 'w2', 'u1': [[0], [0]], 'L1': 2, 'u2': [[5], [5]], 'L2': 2}),
        ('charge-demo', {'experiment': 'charge_demo', 'a': [0], 'b': [5], 'L': 1}),
    ])
    def test_hypothesis_guard(self, cli, tmp_path, command, fields):
        cfg = write_config(tmp_path / 'close.json', trials=10, **fields)
        out = tmp_path / 'out'
        assert cli('run', command, '--config', str(cfg), '--out-dir', str(out)) == ExitCode.HYPOTHESIS
        assert cli.error()['error_code'] == 'HYPOTHESIS_VIOLATED'
        assert cli.error()['exit_code'] == ExitCode.HYPOTHESIS
        assert not (out / 'manifest.json').exists()
        assert not (out / 'config.json').exists()

    def test_hypothesis_messages(self, cli, tmp_path):
        cfg = write_config(tmp_path / 't1.json', experiment='theorem1',
                           u1=[[0], [0]], L1=2, u2=[[5], [5]], L2=2, trials=10)
        assert cli('run', 'theorem1', '--config', str(cfg)) == ExitCode.HYPOTHESIS
        assert '2(N+1)L' in cli.error()['error']
        cfg = write_config(tmp_path / 'w2.json', experiment='w2',
                           u1=[[0], [0]], L1=2, u2=[[5], [5]], L2=2, trials=10)
        assert cli('run', 'w2', '--config', str(cfg)) == ExitCode.HYPOTHESIS
        assert '8L = 16' in cli.error()['error']

    @pytest.mark.parametrize('fields', [
        {'a': [0], 'b': [40], 'L': 1, 'shift_t': ['x']},
        {'a': [0], 'b': [40], 'L': 1, 'shift_t': 0.5},
        {'a': 5, 'b': [40], 'L': 1},
        {'a': [float('inf')], 'b': [40], 'L': 1},
    ])
    def test_invalid_charge_demo_config(self, cli, tmp_path, fields):
        cfg = write_config(tmp_path / 'bad.json', experiment='charge_demo', trials=10, **fields)
        out = tmp_path / 'out'
        assert cli('run', 'charge-demo', '--config', str(cfg), '--out-dir', str(out)) == ExitCode.INVALID_INPUT
        assert cli.error()['error_code'] == 'INVALID_INPUT'
        assert not out.exists()

    def test_outputs_and_manifest(self, cli, tmp_path, theorem1_config):
        out = tmp_path / 'run'
        assert cli('run', 'theorem1', '--config', str(theorem1_config), '--seed', '5',
                   '--out-dir', str(out)) == ExitCode.OK
        summary = cli.output()['data']
        assert summary['trials'] == 40
        assert summary['all_respected']

        lines = (out / 'theorem1.csv').read_text().splitlines()
        assert lines[0] == 's,empirical_p,ci_low,ci_high,bound_h'
        assert len(lines) == 5
        assert (out / 'theorem1.svg').read_bytes().lstrip().startswith(b'<?xml')

        manifest = json.loads((out / 'manifest.json').read_text())
        assert manifest['status'] == 'finalized'
        assert manifest['master_seed'] == 5
        stored = (out / 'config.json').read_bytes()
        assert stored == theorem1_config.read_bytes()
        assert manifest['config_sha256'] == hashlib.sha256(stored).hexdigest()

    def test_workers_do_not_change_outputs(self, cli, tmp_path, theorem1_config):
        for workers in ('1', '2'):
            assert cli('run', 'theorem1', '--config', str(theorem1_config), '--seed', '8',
                       '--workers', workers, '--out-dir', str(tmp_path / f'w{workers}')) == ExitCode.OK
        assert (tmp_path / 'w1' / 'theorem1.csv').read_bytes() == (tmp_path / 'w2' / 'theorem1.csv').read_bytes()
        assert (tmp_path / 'w1' / 'theorem1.svg').read_bytes() == (tmp_path / 'w2' / 'theorem1.svg').read_bytes()

    def test_rerun_from_manifest(self, cli, tmp_path, theorem1_config):
        first = tmp_path / 'first'
        assert cli('run', 'theorem1', '--config', str(theorem1_config), '--seed', '12', '--trials', '30',
                   '--out-dir', str(first)) == ExitCode.OK
        manifest = json.loads((first / 'manifest.json').read_text())
        assert manifest['overrides'] == {'trials': 30}

        second = tmp_path / 'second'
        assert cli('run', 'theorem1', '--from-manifest', str(first / 'manifest.json'),
                   '--out-dir', str(second)) == ExitCode.OK
        assert (first / 'theorem1.csv').read_bytes() == (second / 'theorem1.csv').read_bytes()

    def test_tampered_config_rejected(self, cli, tmp_path, theorem1_config):
        out = tmp_path / 'run'
        assert cli('run', 'theorem1', '--config', str(theorem1_config), '--out-dir', str(out)) == ExitCode.OK
        (out / 'config.json').write_text((out / 'config.json').read_text().replace('40', '41'))
        assert cli('run', 'theorem1', '--from-manifest', str(out / 'manifest.json'),
                   '--out-dir', str(tmp_path / 'again')) == ExitCode.INVALID_INPUT

    def test_s_grid_override(self, cli, tmp_path, theorem1_config):
        out = tmp_path / 'run'
        assert cli('run', 'theorem1', '--config', str(theorem1_config), '--s-grid', '0.02,0.002,5',
                   '--out-dir', str(out)) == ExitCode.OK
        lines = (out / 'theorem1.csv').read_text().splitlines()
        assert [line.split(',')[0] for line in lines[1:]] == ['0.002', '0.02']

    def test_experiment_mismatch(self, cli, theorem1_config):
        assert cli('run', 'w1', '--config', str(theorem1_config)) == ExitCode.INVALID_INPUT

    def test_charge_demo(self, cli, tmp_path):
        cfg = write_config(tmp_path / 'demo.json', experiment='charge_demo', a=[0], b=[40], L=1,
                           trials=20, s_grid=[0.01, 0.1], interaction={'kind': 'pairwise_contact', 'u0': 1.0})
        out = tmp_path / 'demo'
        assert cli('run', 'charge-demo', '--config', str(cfg), '--out-dir', str(out)) == ExitCode.OK
        extras = cli.output()['data']['extras']
        assert extras['occupancy_difference'] == 1
        assert (out / 'charge_demo_t_scan.csv').read_text().startswith('t,distance,slope')

    def test_w1_and_w2(self, cli, tmp_path):
        w1 = write_config(tmp_path / 'w1.json', experiment='w1', u=[[0]], L=2, E=0.0, trials=50, s_grid=[0.01, 0.05])
        assert cli('run', 'w1', '--config', str(w1), '--out-dir', str(tmp_path / 'w1')) == ExitCode.OK
        w2 = write_config(tmp_path / 'w2.json', experiment='w2', u1=[[0], [0]], L1=1, u2=[[30], [30]], L2=1,
                          trials=20, s_grid=[0.01, 0.05])
        assert cli('run', 'w2', '--config', str(w2), '--out-dir', str(tmp_path / 'w2')) == ExitCode.OK
        assert (tmp_path / 'w2' / 'w2.csv').exists()
