"""
Miscellaneous utils: run directories, JSON/CSV writers and run metadata.

Date: October 2026
"""

import json
import os
import platform
from datetime import datetime

import pandas as pd

from covsamp import __version__, paths
from covsamp.stats_utils import QUANTILE_CONVENTION


def create_dir_tree():
    """
    Create directory tree structure
    """
    dirs = paths.get_dirs()
    for key in ('timestamped dir', 'configuration dir'):
        d = dirs[key]
        if not os.path.isdir(d):
            print('creating {}'.format(d))
            os.makedirs(d)


def write_json(doc, path):
    """
    Write a JSON document with sorted keys. NaN and infinity are not valid JSON and raise ValueError.
    """
    with open(path, 'w') as outfile:
        json.dump(doc, outfile, sort_keys=True, indent=4, allow_nan=False)


def save_conf(conf):
    """
    Save CONF to a txt file to ease the reading and to a json file to ease the parsing.

    Parameters
    ----------
    conf : 1-level nested dict
    """
    save_dir = paths.get_conf_dir()
    write_json(conf, os.path.join(save_dir, 'conf.json'))

    with open(os.path.join(save_dir, 'conf.txt'), 'w') as txt_file:
        txt_file.write("{:<25}{:<30}{:<30} \n".format('group', 'key', 'value'))
        txt_file.write('=' * 75 + '\n')
        for key, val in sorted(conf.items()):
            for g_key, g_val in sorted(val.items()):
                txt_file.write("{:<25}{:<30}{:<15} \n".format(key, g_key, str(g_val)))
            txt_file.write('-' * 75 + '\n')


def now():
    return datetime.now().isoformat(timespec='seconds')


def run_metadata(command, seed=None, workers=1, started=None, finished=None, notes=None):
    """
    Provenance block of every output document. It holds wall-clock times and the worker count, so it is the one
    section that differs between reruns of the same configuration.
    """
    meta = {'version': __version__,
            'command': command,
            'seed': seed,
            'workers': workers,
            'started': started,
            'finished': finished or now(),
            'python': platform.python_version(),
            'quantile_convention': QUANTILE_CONVENTION,
            'sd_convention': 'population standard deviation (ddof = 0) over the masks',
            }
    if notes:
        meta['notes'] = list(notes)
    return meta


def write_summary_document(path, meta, config, summaries=None, **sections):
    """
    Write {meta, config, summaries, ...} where summaries is a list of DistributionSummary (or plain dicts).
    """
    doc = {'meta': meta, 'config': config}
    if summaries is not None:
        doc['summaries'] = [s.to_dict() if hasattr(s, 'to_dict') else s for s in summaries]
    doc.update(sections)
    write_json(doc, path)


def write_histogram_csv(path, summaries):
    """
    One row per histogram bin: param, d1, bin, left, right, count.
    """
    rows = []
    for s in summaries:
        edges, counts = s.histogram.get('edges', []), s.histogram.get('counts', [])
        for i, count in enumerate(counts):
            rows.append({'param': s.param, 'd1': s.d1, 'bin': i, 'left': edges[i], 'right': edges[i + 1],
                         'count': count})
    pd.DataFrame(rows, columns=['param', 'd1', 'bin', 'left', 'right', 'count']).to_csv(path, index=False)


def write_table_csv(path, table, index=False):
    table.to_csv(path, index=index, float_format='%.10g')
