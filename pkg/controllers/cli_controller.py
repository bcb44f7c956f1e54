"""
CLI Controller - Command-line surface: geometry queries, spectra and experiment runs
"""
import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO

from models.errors import ExitCode, InvalidInputError, MpresError
from models.experiment import ExperimentConfig, RunManifest, normalize_s_grid
from models.geometry import Configuration, MultiCube
from repositories.config_repository import ConfigRepository
from repositories.run_repository import RunRepository
from services.experiment_service import ExperimentService
from services.field_service import FieldService
from services.geometry_service import GeometryService
from services.hamiltonian_service import HamiltonianService
from controllers.trial_controller import TrialController
from views.json_view import JSONView
from views.plot_view import PlotView
from views.table_view import TableView
import config

logger = logging.getLogger(__name__)

RUN_EXPERIMENTS = {'theorem1': 'theorem1', 'w1': 'w1', 'w2': 'w2', 'charge-demo': 'charge_demo'}


class ArgumentError(InvalidInputError):
    """Command line could not be parsed"""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting"""

    def error(self, message):
        raise ArgumentError(f"{self.prog}: {message}")


def _configuration_arg(text: str, name: str) -> Configuration:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{name} is not valid JSON: {e}") from e
    return Configuration.from_list(data)


class CLIController:
    """
    CLI Controller - Parses arguments, calls services, renders views
    Exceptions are mapped to exit codes here and nowhere else
    """

    def __init__(self, geometry: GeometryService, field: FieldService, hamiltonian: HamiltonianService,
                 experiment: ExperimentService, config_repo: ConfigRepository,
                 stdout: TextIO = None, stderr: TextIO = None):
        self.geometry = geometry
        self.field = field
        self.hamiltonian = hamiltonian
        self.experiment = experiment
        self.config_repo = config_repo
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr

    def build_parser(self) -> argparse.ArgumentParser:
        parser = _Parser(prog='mpres', description='Multi-particle eigenvalue concentration experiments')
        commands = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

        geom = commands.add_parser('geom', help='configuration geometry queries')
        geom_commands = geom.add_subparsers(dest='geom_command', required=True, parser_class=_Parser)
        dsym = geom_commands.add_parser('dsym', help='symmetrized distance d_S')
        dsym.add_argument('x')
        dsym.add_argument('y')
        dsym.add_argument('--method', choices=['assignment', 'enumerate'], default='assignment')
        cluster = geom_commands.add_parser('cluster', help='R-cluster decomposition')
        cluster.add_argument('x')
        cluster.add_argument('--R', type=int, required=True)
        separate = geom_commands.add_parser('separate', help='weak-separability certificate')
        separate.add_argument('x')
        separate.add_argument('y')
        separate.add_argument('--L', type=int, required=True)
        separate.add_argument('--verbose', action='store_true', help='include the occupancy table')
        width = geom_commands.add_parser('width', help='decoupling width')
        width.add_argument('x')
        width.add_argument('--cube-L', type=int, default=None, help='width of the cube C_L(x) instead of x')

        spectrum = commands.add_parser('spectrum', help='eigenvalues of one cube operator')
        spectrum.add_argument('--config', required=True)
        spectrum.add_argument('--seed', type=int, default=None)
        spectrum.add_argument('--trial', type=int, default=0)
        spectrum.add_argument('--out-dir', default=None)
        spectrum.add_argument('--export-matrix', action='store_true')
        spectrum.add_argument('--export-field', action='store_true')

        run = commands.add_parser('run', help='Monte Carlo experiment')
        run.add_argument('experiment', choices=sorted(RUN_EXPERIMENTS))
        source = run.add_mutually_exclusive_group(required=True)
        source.add_argument('--config')
        source.add_argument('--from-manifest')
        run.add_argument('--seed', type=int, default=None)
        run.add_argument('--workers', type=int, default=None)
        run.add_argument('--out-dir', default=None)
        run.add_argument('--s-grid', default=None, help='comma-separated s values in (0, 1)')
        run.add_argument('--trials', type=int, default=None)
        return parser

    def execute(self, argv: Optional[List[str]] = None) -> int:
        """Run one command; returns the process exit code"""
        try:
            args = self.build_parser().parse_args(argv)
            handler = {'geom': self._geom, 'spectrum': self._spectrum, 'run': self._run}[args.command]
            payload = handler(args)
            self._emit(self.stdout, payload)
            return ExitCode.OK
        except MpresError as e:
            if isinstance(e, ArgumentError) or e.exit_code == ExitCode.INVALID_INPUT:
                logger.error(f"Invalid input: {e}")
            else:
                logger.warning(f"Command refused: {e}")
            self._emit(self.stderr, JSONView.from_exception(e))
            return e.exit_code
        except Exception as e:
            logger.exception(f"Unexpected failure: {e}")
            self._emit(self.stderr, JSONView.error(str(e), 'INTERNAL_ERROR'))
            return ExitCode.FAILURE

    @staticmethod
    def _emit(stream: TextIO, payload: Dict[str, Any]):
        stream.write(JSONView.dumps(payload) + '\n')
        stream.flush()

    # geom
    def _geom(self, args) -> Dict[str, Any]:
        x = _configuration_arg(args.x, 'x')
        if args.geom_command == 'dsym':
            y = _configuration_arg(args.y, 'y')
            return JSONView.distance('d_S', self.geometry.sym_distance(x, y, method=args.method))
        if args.geom_command == 'cluster':
            return JSONView.decomposition(self.geometry.cluster_decompose(x, args.R))
        if args.geom_command == 'separate':
            y = _configuration_arg(args.y, 'y')
            cert = self.geometry.weak_separability(x, y, args.L)
            occupancy = self.geometry.occupancy_numbers(x, y, args.L) if args.verbose else None
            return JSONView.certificate(cert, occupancy)
        if args.cube_L is not None:
            return JSONView.distance('width', self.geometry.decoupling_width_cube(MultiCube(x, args.cube_L)))
        return JSONView.distance('width', self.geometry.decoupling_width(x))

    # spectrum
    def _spectrum(self, args) -> Dict[str, Any]:
        cfg, _ = self.config_repo.load(args.config)
        if cfg.experiment != 'spectrum':
            raise InvalidInputError(f"spectrum needs a 'spectrum' config, got {cfg.experiment!r}")
        seed = args.seed if args.seed is not None else (cfg.seed or 0)
        u, L = cfg.params['u'], cfg.params['L']

        basis = self.hamiltonian.enumerate_cube(u, L)
        sample = self.field.sample_field(cfg.model, basis.sites(), seed, args.trial)
        op = self.hamiltonian.assemble(u, L, sample, cfg.interaction)
        spec = self.hamiltonian.spectrum(op)

        repo = RunRepository(args.out_dir or config.OUT_DIR)
        outputs = {'spectrum': str(repo.write_text('spectrum.csv', TableView.spectrum(spec)))}
        if args.export_matrix:
            outputs['matrix'] = str(repo.export_matrix(op, 'operator.mtx'))
        if args.export_field:
            outputs['field'] = str(repo.write_text('field.csv', TableView.field(sample)))
        logger.info(f"Spectrum of dimension {len(spec)} written to {outputs['spectrum']}")
        return JSONView.success({'dimension': len(spec), 'seed': seed, 'trial': args.trial,
                                 'operator': op.metadata(), 'outputs': outputs})

    # run
    def _run(self, args) -> Dict[str, Any]:
        experiment = RUN_EXPERIMENTS[args.experiment]
        overrides: Dict[str, Any] = {}
        if args.from_manifest:
            manifest = RunRepository(Path(args.from_manifest).parent).load_manifest(args.from_manifest)
            stored = RunRepository.stored_config_for(args.from_manifest)
            if not RunRepository(stored.parent).verify_manifest(manifest, stored):
                raise InvalidInputError(f"manifest {args.from_manifest} is not finalized or its config hash does not match")
            cfg, raw = self.config_repo.load(stored)
            seed = manifest.master_seed
            overrides = dict(manifest.overrides)
        else:
            cfg, raw = self.config_repo.load(args.config)
            seed = args.seed if args.seed is not None else (cfg.seed or 0)
        if cfg.experiment != experiment:
            raise InvalidInputError(f"run {args.experiment} needs a {experiment!r} config, got {cfg.experiment!r}")

        if args.s_grid:
            try:
                overrides['s_grid'] = list(normalize_s_grid(float(v) for v in args.s_grid.split(',')))
            except ValueError as e:
                raise InvalidInputError(f"--s-grid: {e}") from e
        if args.trials is not None:
            if args.trials < 1:
                raise InvalidInputError("--trials must be positive")
            overrides['trials'] = args.trials
        params = dict(cfg.params)
        params.update(overrides)
        # hypotheses are checked before anything is written
        if experiment == 'theorem1':
            run = cfg.to_run(seed, trials=params['trials'], s_grid=params['s_grid'])
            self.experiment.check_hypothesis(run)
        elif experiment == 'w2':
            self.experiment.check_w2_hypothesis(params['u1'], params['L1'], params['u2'], params['L2'])
        elif experiment == 'charge_demo':
            self.experiment.check_charge_demo_hypothesis(params['a'], params['b'], params['L'])

        repo = RunRepository(args.out_dir or config.OUT_DIR)
        manifest = RunManifest(experiment=experiment, config_sha256=repo.store_config(raw),
                               master_seed=seed, overrides=overrides)
        repo.save_manifest(manifest)
        started = time.perf_counter()

        workers = TrialController(self.experiment, num_workers=args.workers)
        try:
            result = self._dispatch(experiment, cfg, params, seed, workers.collect)
        except Exception:
            manifest.status = 'failed'
            repo.save_manifest(manifest)
            raise

        names = {'csv': f'{experiment}.csv', 'svg': f'{experiment}.svg', 'config': 'config.json'}
        repo.write_text(names['csv'], TableView.curve(result.points))
        repo.write_bytes(names['svg'], PlotView.result_svg(result))
        if 't_scan' in result.extras:
            names['t_scan'] = f'{experiment}_t_scan.csv'
            repo.write_text(names['t_scan'], TableView.t_scan(result.extras['t_scan']))
        outputs = repo.outputs(names)
        manifest.finalize(outputs, round(time.perf_counter() - started, 3),
                          summary={'trials': result.cdf.count, 'all_respected': result.all_respected,
                                   'curve': result.curve.label, 'fitted': result.curve.fitted})
        repo.save_manifest(manifest)
        logger.info(f"Run {experiment} finalized in {manifest.runtime_seconds}s, outputs in {repo.out_dir}")
        return JSONView.run_summary(result, outputs)

    def _dispatch(self, experiment: str, cfg: ExperimentConfig, params: Dict[str, Any], seed: int, runner):
        if experiment == 'theorem1':
            run = cfg.to_run(seed, trials=params['trials'], s_grid=params['s_grid'])
            return self.experiment.run_theorem1(run, runner)
        if experiment == 'w1':
            return self.experiment.run_w1(cfg.model, params['u'], params['L'], params['E'], params['s_grid'],
                                          params['trials'], seed, cfg.interaction, runner)
        if experiment == 'w2':
            return self.experiment.run_w2(cfg.model, params['u1'], params['L1'], params['u2'], params['L2'],
                                          params['s_grid'], params['trials'], seed, cfg.interaction, runner)
        return self.experiment.run_charge_transfer_demo(
            params['a'], params['b'], params['L'], cfg.model, params['trials'], seed,
            interaction=cfg.interaction, s_grid=params['s_grid'], shift_t=params['shift_t'],
            bound_mode=params.get('bound_mode', 'worst_case'),
            occupancy_factor=params.get('occupancy_factor', False), runner=runner,
        )
