import argparse
import os
import sys
from collections import OrderedDict

import numpy as np

from core.base_model import TrainingAborted
from core.logger import InfoLogger, VisualWriter
import core.praser as Praser
from data import define_dataloader, define_processor


class UsageError(Exception):
    """ bad flags or inputs; exit code 2 """


def _sizes(text, d=None):
    try:
        sizes = tuple(int(v) for v in str(text).split(',') if v.strip())
    except ValueError:
        raise UsageError('sizes must be comma separated integers, got [{}]'.format(text))
    if not sizes or any(n < 2 for n in sizes):
        raise UsageError('sizes must be integers >= 2, got [{}]'.format(text))
    if d is not None and len(sizes) == 1:
        sizes = sizes * d
    return sizes


def cmd_generate(args):
    from data.dataset import generate_dataset
    if args.count < 1:
        raise UsageError('--count must be >= 1, got {}'.format(args.count))
    params = OrderedDict()
    for item in args.param or []:
        if '=' not in item:
            raise UsageError('--param expects key=value, got [{}]'.format(item))
        key, value = item.split('=', 1)
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise UsageError('--param {} is not a number'.format(item))
    try:
        generate_dataset(args.kind, args.count, args.res, params, seed=args.seed, path=args.out,
                         start=args.start, workers=args.workers)
    except ValueError as e:
        raise UsageError(str(e))
    print('{} samples={} bytes={}'.format(args.out, args.count, os.path.getsize(args.out)))
    return 0


def cmd_train(args):
    from models import create_model, define_loss, define_network
    from models.metric import relative_l2

    args.phase = 'train'
    opt = Praser.parse(args)

    ''' set logger '''
    phase_logger = InfoLogger(opt)
    phase_writer = VisualWriter(opt, phase_logger)
    phase_logger.info('Create the log file in directory {}.\n'.format(opt['path']['experiments_root']))
    phase_logger.info('Resolved config:\n{}'.format(Praser.dict2str(Praser.run_pairs(opt))))

    '''set networks and dataset'''
    phase_loader, val_loaders = define_dataloader(phase_logger, opt)
    dataset = phase_loader.dataset
    if dataset.x.shape[1] != opt['model']['in_channels']:
        raise Praser.ConfigError('in_channels={} but {} holds {} input channels'.format(
            opt['model']['in_channels'], opt['data']['train_path'], dataset.x.shape[1]))
    d = dataset.x.ndim - 2
    processor = define_processor(phase_logger, opt, dataset)
    network = define_network(phase_logger, opt, in_channels=opt['model']['in_channels'] + processor.extra_channels(d), d=d)
    loss = define_loss(phase_logger, opt['train'])

    model = create_model(
        opt=opt,
        networks=[network],
        losses=[loss],
        processor=processor,
        phase_loader=phase_loader,
        val_loaders=val_loaders,
        metrics=[relative_l2],
        logger=phase_logger,
        writer=phase_writer
    )

    phase_logger.info('Begin model {}.'.format(opt['phase']))
    try:
        model.train()
    finally:
        phase_writer.close()
    return 0


def _load(checkpoint):
    from models.checkpoint import load_checkpoint, load_processor, run_config
    network = load_checkpoint(checkpoint)
    processor = load_processor(checkpoint)
    run = run_config(checkpoint)
    return network, processor, run


def cmd_eval(args):
    from data import DataLoader
    from data.dataset import OperatorDataset
    from models.metric import evaluate_loader, relative_h1, relative_l2

    network, processor, run = _load(args.checkpoint)
    batch_size = args.batch or int(run.get('batch_size', 8))
    n_test = args.n if args.n is not None else int(run.get('n_test', 0))
    metrics = [relative_l2, relative_h1] if args.h1 else [relative_l2]
    resolutions = _sizes(args.res)
    datasets = OrderedDict()
    for res in resolutions:
        try:
            datasets[res] = OperatorDataset(args.data, n_test, res)
        except ValueError as e:
            raise UsageError(str(e))
    for res, dataset in datasets.items():
        try:
            result = evaluate_loader(network, processor, DataLoader(dataset, batch_size), metrics, phase='eval')
        except ValueError as e:
            raise UsageError('resolution {}: {}'.format(res, e))
        print(' '.join(['res={}'.format(res)] + ['{}={!r}'.format(k, v) for k, v in result.items()]))
    return 0


def cmd_infer(args):
    from data.dataset import metadata_bounds, read_dataset, write_dataset
    from core.base_dataset import GridFunction
    from core.tensor import Tensor

    network, processor, run = _load(args.checkpoint)
    stored = read_dataset(args.input)
    if 'x' not in stored.arrays:
        raise UsageError('{} has no input tensor "x"'.format(args.input))
    x = stored.arrays['x']
    d = x.ndim - 2
    sizes = _sizes(args.sizes, d)
    if len(sizes) != d:
        raise UsageError('{} output sizes given for {}-D inputs'.format(len(sizes), d))
    bounds = metadata_bounds(stored.metadata, d)
    batch_size = int(run.get('batch_size', 8))

    predictions = []
    for start in range(0, x.shape[0], batch_size):
        data = {'x': GridFunction(Tensor(x[start:start + batch_size]), bounds)}
        data['y'] = data['x']
        try:
            pre = processor.preprocess(data)
            output = network.forward_grid(pre['x'], processor.padded_sizes(sizes))
            pred = processor.postprocess(output, bounds, sizes)
        except ValueError as e:
            raise UsageError(str(e))
        predictions.append(pred.data.numpy())

    arrays = OrderedDict([('y_pred', np.concatenate(predictions, axis=0))])
    metadata = OrderedDict(stored.metadata)
    metadata.update([('resolution', sizes[0]), ('count', x.shape[0]),
                     ('bounds', tuple(v for b in bounds for v in b)),
                     ('checkpoint', os.path.basename(args.checkpoint))])
    write_dataset(args.out, arrays, metadata)
    print('{} samples={} sizes={}'.format(args.out, x.shape[0], 'x'.join(str(n) for n in sizes)))
    return 0


def cmd_selftest(args):
    from selftest import run_suites
    return 0 if run_suites(args.suite) else 1


def build_parser():
    parser = argparse.ArgumentParser(description='Neural operators on PDE data: generate, train, eval, infer.')
    subparsers = parser.add_subparsers(dest='command')
    subparsers.required = True

    p = subparsers.add_parser('generate', help='Generate a Darcy or Burgers dataset file')
    p.add_argument('--kind', type=str, choices=['darcy', 'burgers'], required=True)
    p.add_argument('--count', type=int, required=True)
    p.add_argument('--res', type=int, required=True)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--start', type=int, default=0, help='index of the first sample, for split generation')
    p.add_argument('--workers', type=int, default=1)
    p.add_argument('--param', action='append', help='solver or field parameter as key=value')
    p.add_argument('--out', type=str, required=True)
    p.set_defaults(func=cmd_generate)

    p = subparsers.add_parser('train', help='Train from a key=value config file')
    p.add_argument('-c', '--config', type=str, required=True, help='key=value file for configuration')
    p.add_argument('-d', '--debug', action='store_true')
    p.add_argument('--screen', action='store_true', help='echo the log to the terminal')
    p.set_defaults(func=cmd_train)

    p = subparsers.add_parser('eval', help='Relative errors of a checkpoint at one or more resolutions')
    p.add_argument('--checkpoint', type=str, required=True)
    p.add_argument('--data', type=str, required=True)
    p.add_argument('--res', type=str, required=True, help='comma separated resolutions')
    p.add_argument('--h1', action='store_true')
    p.add_argument('--n', type=int, default=None, help='number of samples, defaults to the run n_test')
    p.add_argument('--batch', type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = subparsers.add_parser('infer', help='Predict at requested output sizes')
    p.add_argument('--checkpoint', type=str, required=True)
    p.add_argument('--input', type=str, required=True)
    p.add_argument('--sizes', type=str, required=True)
    p.add_argument('--out', type=str, required=True)
    p.set_defaults(func=cmd_infer)

    p = subparsers.add_parser('selftest', help='Run the oracle suites')
    p.add_argument('--suite', action='append', choices=['fft', 'gradients', 'darcy', 'burgers'])
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return args.func(args)
    except (UsageError, Praser.ConfigError) as e:
        print('error: {}'.format(e), file=sys.stderr)
        return 2
    except TrainingAborted as e:
        print('error: {}'.format(e), file=sys.stderr)
        return 1
    except Exception as e:
        print('error: {}: {}'.format(e.__class__.__name__, e), file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
