#!/usr/bin/env python3
import argparse
import json
import logging
import os
import sys

from toolcl.cl.config import RunConfig, load_config_file, STRATEGIES
from toolcl.data.constants import BENCHMARKS, DEFAULT_TOOL_ACCURACY
from toolcl.exceptions import ToolclException, ConfigException
from toolcl.misc import setup_logger
from toolcl.runs import run_experiment, aggregate_runs, write_report, print_summary, output_root
from toolcl.tasks.benchmark import generate_benchmark, write_benchmark
from toolcl.tools.registry import default_registry
from toolcl.tools.server import EchoHandler, OracleHandler, serve_stdio, serve_tcp

if sys.version_info < (3, 5):
    print('At least Python version 3.5 is required to run this script!')
    sys.exit(1)

LOGGER = logging.getLogger(__name__)
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with 1, runtime failures use 2."""
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write('{}: error: {}\n'.format(self.prog, message))
        sys.exit(EXIT_USAGE)


ARGS = ArgumentParser(
    prog='toolcl',
    description='Continual learning of tool use with small language models',
    formatter_class=argparse.ArgumentDefaultsHelpFormatter)
SUBARGS = ARGS.add_subparsers(dest='cmd')

# General options
ARGS.add_argument(
    '-v', '--verbose', action='count', dest='level',
    default=2, help='verbose logging (repeat for more verbosity)')
ARGS.add_argument(
    '-q', '--quiet', action='store_const', const=0, dest='level',
    default=2, help='only log errors')
ARGS.add_argument(
    '-t', '--trace', action='store_const', const=9, dest='level',
    default=2, help='log wire protocol messages and every generation')

pgen = SUBARGS.add_parser('gen', help='generate a benchmark',
                          formatter_class=argparse.ArgumentDefaultsHelpFormatter)
pgen.add_argument(
    'benchmark', choices=list(BENCHMARKS), help='benchmark to generate')
pgen.add_argument(
    '--seed', action='store', type=int, default=0, help='generation seed')
pgen.add_argument(
    '--out', action='store', dest='out_dir', default=None,
    help='output directory (default: <output root>/benchmarks/<benchmark>-seed<seed>)')
pgen.add_argument(
    '--tool-accuracy', action='store', dest='tool_accuracy', type=float,
    default=DEFAULT_TOOL_ACCURACY, help='accuracy of the imperfect classification tools (cls only)')

ptrain = SUBARGS.add_parser('train', help='train a model on a benchmark',
                            formatter_class=argparse.ArgumentDefaultsHelpFormatter)
ptrain.add_argument(
    'manifest', help='benchmark manifest (or the directory holding it)')
ptrain.add_argument(
    '--tools', action='store', choices=['on', 'off'], default=None,
    help='train on API calls (on) or on raw answers (off), default from config: on')
ptrain.add_argument(
    '--strategy', action='store', choices=list(STRATEGIES), default=None,
    help='continual learning strategy, default from config: sequential')
ptrain.add_argument(
    '--seed', action='store', dest='seeds', default=None,
    help='seed or seed list, e.g. 0, 0-2 or 0,3,5')
ptrain.add_argument(
    '--task-order-seed', action='store', dest='task_order_seed', type=int, default=None,
    help='train the tasks in a permutation drawn with this seed (default: the run seed)')
ptrain.add_argument(
    '--config', action='store', dest='config', default=None,
    help='JSON config file with (flat dotted) RunConfig keys')
ptrain.add_argument(
    '--set', action='append', dest='overrides', default=[], metavar='KEY=VALUE',
    help='override a config key, e.g. --set model.d_model=64 (repeatable)')
ptrain.add_argument(
    '--eval-workers', action='store', dest='eval_workers', type=int, default=None,
    help='threads evaluating test sets concurrently')
ptrain.add_argument(
    '--out', action='store', dest='out_dir', default=None,
    help='run directory (default: <output root>/<benchmark>-<mode>-<strategy>)')
ptrain.add_argument(
    '--force', action='store_true', default=False, help='reuse an existing run directory')

preport = SUBARGS.add_parser('report', help='aggregate finished runs',
                             formatter_class=argparse.ArgumentDefaultsHelpFormatter)
preport.add_argument(
    'run_dirs', nargs='+', help='run directories (a directory of seed_<n> runs counts as all of them)')
preport.add_argument(
    '--out', action='store', dest='out_dir', default=None,
    help='report directory (default: <output root>/report)')

pserve = SUBARGS.add_parser('toolserve', help='serve tools over the newline delimited JSON protocol',
                            formatter_class=argparse.ArgumentDefaultsHelpFormatter)
pserve_mode = pserve.add_mutually_exclusive_group(required=True)
pserve_mode.add_argument(
    '--echo', action='store_const', const='echo', dest='serve_mode', help='answer with the call text')
pserve_mode.add_argument(
    '--oracle', action='store_const', const='oracle', dest='serve_mode', help='execute calls')
pserve.add_argument(
    '--listen', action='store', default=None, metavar='HOST:PORT',
    help='serve on a TCP socket instead of standard streams')
pserve.add_argument(
    '--tool-accuracy', action='store', dest='tool_accuracy', type=float, default=None,
    help='make the classification tools imperfect with this accuracy')
pserve.add_argument(
    '--seed', action='store', type=int, default=0, help='seed of the imperfect tools')


def parse_override(text):
    """KEY=VALUE with VALUE parsed as JSON when possible.

    parse_override('optim.peak_lr=1e-3')
    ('optim.peak_lr', 0.001)
    """
    key, sep, value = text.partition('=')
    if not sep or not key:
        raise ConfigException('Override {!r} should look like KEY=VALUE'.format(text))
    try:
        return key.strip(), json.loads(value)
    except ValueError:
        return key.strip(), value


def build_run_config(args):
    """defaults < --config file < command line flags"""
    run_config = RunConfig()
    if args.config:
        run_config.update(load_config_file(args.config))
    flags = {}
    if args.tools is not None:
        flags['mode'] = 'tools' if args.tools == 'on' else 'raw'
    if args.strategy is not None:
        flags['strategy'] = args.strategy
    if args.task_order_seed is not None:
        flags['task_order_seed'] = args.task_order_seed
    if args.eval_workers is not None:
        flags['eval_workers'] = args.eval_workers
    flags.update(parse_override(o) for o in args.overrides)
    run_config.update(flags)
    return run_config


def cmd_gen(args):
    tasks = generate_benchmark(args.benchmark, args.seed, args.tool_accuracy)
    out_dir = args.out_dir or os.path.join(output_root(), 'benchmarks',
                                           '{}-seed{}'.format(args.benchmark, args.seed))
    path = write_benchmark(tasks, out_dir, args.benchmark, args.seed)
    print(path)


def cmd_train(args):
    run_config = build_run_config(args)
    seeds = args.seeds if args.seeds is not None else run_config.seed
    run_dirs = run_experiment(args.manifest, run_config, seeds, out_dir=args.out_dir, force=args.force)
    for run_dir in run_dirs:
        print(run_dir)


def cmd_report(args):
    records = aggregate_runs(args.run_dirs)
    summary = write_report(records, args.out_dir or os.path.join(output_root(), 'report'))
    print_summary(summary)


def cmd_toolserve(args):
    if args.serve_mode == 'echo':
        handler = EchoHandler()
    else:
        handler = OracleHandler(default_registry(tool_accuracy=args.tool_accuracy), seed=args.seed)
    if args.listen:
        host, sep, port = args.listen.rpartition(':')
        try:
            port = int(port)
        except ValueError:
            sep = None
        if not sep:
            ARGS.error('--listen expects HOST:PORT, got {}'.format(args.listen))
        serve_tcp(handler, host or '127.0.0.1', port)
    else:
        serve_stdio(handler)


COMMANDS = {'gen': cmd_gen,
            'train': cmd_train,
            'report': cmd_report,
            'toolserve': cmd_toolserve}


def main(argv=None):
    args = ARGS.parse_args(argv)
    setup_logger(args.level)
    if not args.cmd:
        ARGS.error('a command is required: {}'.format(', '.join(COMMANDS)))
    try:
        COMMANDS[args.cmd](args)
    except ToolclException as e:
        LOGGER.error(e.message)
        return EXIT_FAILURE
    except OSError as e:
        LOGGER.error('{}: {}'.format(type(e).__name__, e))
        return EXIT_FAILURE
    except KeyboardInterrupt:
        LOGGER.error('Interrupted')
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
