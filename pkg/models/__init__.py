import core.util as Util


def create_model(**cfg_model):
    """ create_model """
    from models.model import OperatorModel
    return OperatorModel(**cfg_model)


def network_kwargs(opt, in_channels=None, d=None):
    """ build_network keyword arguments from a parsed run config """
    model_opt = opt['model']
    kwargs = {
        'd': d if d is not None else (1 if opt['data']['kind'] == 'burgers' else 2),
        'in_channels': in_channels if in_channels is not None else model_opt['in_channels'],
        'out_channels': model_opt['out_channels'],
        'hidden_channels': model_opt['width'],
        'seed': Util.derive_seeds(opt['seed'])['init'],
    }
    if model_opt['arch'] == 'gno':
        kwargs.update({'radius': model_opt['radius'], 'kernel_width': model_opt['kernel_width'],
                       'search': model_opt['graph_search']})
    else:
        modes = model_opt['modes']
        kwargs.update({
            'n_layers': model_opt['n_layers'],
            'modes': modes * kwargs['d'] if len(modes) == 1 else modes,
            'padding_fraction': 0.0 if 'pad' in opt['data']['pipeline'] else model_opt['padding_fraction'],
            'factorization': model_opt['factorization'],
            'rank_fraction': model_opt['rank_fraction'],
            'tucker_implementation': model_opt['tucker_implementation'],
            'positional_embedding': model_opt['positional_embedding'],
        })
    return kwargs


def define_network(logger, opt, in_channels=None, d=None):
    """ define network with weights initialization """
    from models.network import build_network
    kwargs = network_kwargs(opt, in_channels, d)
    net = build_network(opt['model']['arch'], **kwargs)
    logger.info('Network [{}] weights initialize using seed [{:d}], {:,d} parameters.'.format(
        net.__class__.__name__, kwargs['seed'], net.parameter_count()))
    return net


def define_loss(logger, train_opt):
    from models.loss import H1Loss, LpLoss
    loss = H1Loss() if train_opt['loss'] == 'h1' else LpLoss(train_opt['loss_p'])
    logger.info('Loss [{}] in {} space.'.format(loss.__name__, train_opt['loss_space']))
    return loss
