"""
Input and output directories of a covsamp run.

Date: October 2026
"""

import os.path
from datetime import datetime

from covsamp import config


homedir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

CONF = config.conf_dict(config.CONF)
timestamp = datetime.now().strftime('%Y-%m-%d_%H%M%S')
command = 'run'
out_dir = None


def get_base_dir():
    base_dir = CONF['general']['base_directory']
    if os.path.isabs(base_dir):
        return base_dir
    else:
        return os.path.abspath(os.path.join(homedir, base_dir))


def get_output_dir():
    output_dir = CONF['general']['output_directory']
    if os.path.isabs(output_dir):
        return output_dir
    else:
        return os.path.abspath(os.path.join(get_base_dir(), output_dir))


def get_timestamped_dir():
    if out_dir is not None:
        return os.path.abspath(out_dir)
    return os.path.join(get_output_dir(), '{}_{}'.format(command, timestamp))


def get_conf_dir():
    return os.path.join(get_timestamped_dir(), "conf")


def resolve(path):
    """
    Relative input paths are read from the base directory.
    """
    if path is None or os.path.isabs(path) or os.path.exists(path):
        return path
    return os.path.join(get_base_dir(), path)


def get_dirs():
    return {'base dir': get_base_dir(),
            'output dir': get_output_dir(),
            'timestamped dir': get_timestamped_dir(),
            'configuration dir': get_conf_dir(),
            }


def print_dirs():
    dirs = get_dirs()
    max_len = max([len(v) for v in dirs.keys()])
    for k, v in dirs.items():
        print('{k:{l:d}s} {v:3s}'.format(l=max_len + 5, v=v, k=k))
