"""
Configuration of the covariate sampling application. It loads the default configuration (with its schema) from a
YAML file and merges user configuration files and command line overrides into it.

Date: October 2026
"""

import builtins
import copy
import os
import textwrap

import yaml

from covsamp.errors import ConfigError


homedir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
conf_path = os.path.join(homedir, 'etc', 'config.yaml')
with open(conf_path, 'r') as f:
    CONF = yaml.safe_load(f)


def _check_type(key, value, type_name):
    var_type = getattr(builtins, type_name)
    if var_type is float and type(value) is int:
        return
    if type(value) is not var_type:
        raise ConfigError('The selected value for {} must be a {}.'.format(key, type_name))


def check_conf(conf):
    """
    Checks for configuration parameters
    """
    for group, val in sorted(conf.items()):
        for g_key, g_val in sorted(val.items()):
            gg_keys = g_val.keys()
            value = g_val['value']

            if value is None:
                continue

            if 'type' in gg_keys:
                _check_type(g_key, value, g_val['type'])

            if ('item_type' in gg_keys) and isinstance(value, list):
                for item in value:
                    _check_type('{} items'.format(g_key), item, g_val['item_type'])

            if ('choices' in gg_keys) and (value not in g_val['choices']):
                raise ConfigError('The selected value for {} is not an available choice: {}.'.format(
                    g_key, g_val['choices']))

            if 'range' in gg_keys:
                low, high = g_val['range']
                items = value if isinstance(value, list) else [value]
                for item in items:
                    if (low is not None) and (low > item):
                        raise ConfigError('The selected value for {} is lower than the minimal possible value.'.format(g_key))
                    if (high is not None) and (high < item):
                        raise ConfigError('The selected value for {} is higher than the maximal possible value.'.format(g_key))


def conf_dict(conf=CONF):
    """
    Return configuration as dict
    """
    conf_d = {}
    for group, val in conf.items():
        conf_d[group] = {}
        for g_key, g_val in val.items():
            conf_d[group][g_key] = g_val['value']
    return conf_d


def load_user_conf(path):
    """
    Read a user configuration file. Values may be given plainly (`key: value`) or as schema entries
    (`key: {value: ...}`).
    """
    if not os.path.isfile(path):
        raise ConfigError('Configuration file {} does not exist.'.format(path))
    with open(path, 'r') as f:
        try:
            user = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError('Could not parse configuration file {}: {}'.format(path, e))
    if user is None:
        return {}
    if not isinstance(user, dict) or not all(isinstance(v, dict) for v in user.values()):
        raise ConfigError('Configuration file {} must map groups to key-value mappings.'.format(path))
    return user


def update_conf(conf, user):
    """
    Merge user values into a copy of a schema configuration.

    Parameters
    ----------
    conf : dict
        Schema configuration (as loaded from etc/config.yaml).
    user : dict
        {group: {key: value}}. Unknown groups or keys raise ConfigError.

    Returns
    -------
    New validated schema configuration.
    """
    new_conf = copy.deepcopy(conf)
    for group, val in user.items():
        if group not in new_conf:
            raise ConfigError('Unknown configuration group "{}".'.format(group))
        for g_key, g_val in val.items():
            if g_key not in new_conf[group]:
                raise ConfigError('Unknown configuration key "{}" in group "{}".'.format(g_key, group))
            if isinstance(g_val, dict) and 'value' in g_val:
                g_val = g_val['value']
            entry = new_conf[group][g_key]
            if entry.get('type') == 'float' and type(g_val) is int:
                g_val = float(g_val)
            if entry.get('item_type') == 'float' and isinstance(g_val, list):
                g_val = [float(v) if type(v) is int else v for v in g_val]
            entry['value'] = g_val
    check_conf(new_conf)
    return new_conf


def print_full_conf(conf):
    """
    Print all configuration parameters (including help, range, choices, ...)
    """
    for group, val in sorted(conf.items()):
        print('=' * 75)
        print('{}'.format(group))
        print('=' * 75)
        for g_key, g_val in sorted(val.items()):
            print('{}'.format(g_key))
            for gg_key, gg_val in g_val.items():
                print('{}{}'.format(' '*4, gg_key))
                body = '\n'.join(['\n'.join(textwrap.wrap(line, width=110, break_long_words=False,
                                                          replace_whitespace=False,
                                                          initial_indent=' '*8, subsequent_indent=' '*8))
                                  for line in str(gg_val).splitlines() if line.strip() != ''])
                print(body)
            print('\n')


def print_conf_table(conf):
    """
    Print configuration parameters in a table
    """
    print("{:<25}{:<30}{:<30}".format('group', 'key', 'value'))
    print('=' * 75)
    for group, val in sorted(conf.items()):
        for g_key, g_val in sorted(val.items()):
            print("{:<25}{:<30}{:<15}".format(group, g_key, str(g_val)))
        print('-' * 75)


check_conf(CONF)
