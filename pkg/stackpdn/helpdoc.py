#!/usr/bin/env python
""" Manages help info

    See the file "LICENSE" for the full license governing this code.
    Copyright 2021 Ken Farmer
"""


HELP_SECTION = """Help Options:
   -h, --help           Show help message and exit.
   --long-help          Show verbose help and exit.
   -V, --version        Show version info and exit.  """


RUN_SECTION = """Run Options:
   --design DESIGN      One of clustered, distributed or both.
                        Defaults to the config file's design, or both.
   --margin-mv MV       IR-drop margin in millivolts.
                        Defaults to 75.
   --verbosity LEVEL    One of quiet, normal, high, debug.
                        Logging goes to stderr; debug also prints the consolidated config.  """


OUTPUT_SECTION = """Output Options:
   --out DIR            Directory the output files are written to.
                        Created if missing.  Defaults to the current directory.  """


CONFIG_SECTION = """Config File Options:
   --config PATH        Specifies a run config file of 'key = value' lines.
                        Relative paths inside it are relative to the file's directory.
                        Command line options override the file.
   --gen-config PATH    Writes the consolidated run config to PATH and exits.
                        The written file reproduces the run when passed to --config.  """


WORKLOAD_SECTION = """Workload Options:
   --workload PATH [PATH ...]
                        Workload profile files to run.
                        Defaults to the nine bundled profiles.
   --horizon-years YEARS
                        Simulation horizon in years.
                        Defaults to 60.  """


def expand_long_help(val: str) -> str:
    return val.replace('{see: helpdoc.RUN_SECTION}', RUN_SECTION).\
               replace('{see: helpdoc.OUTPUT_SECTION}', OUTPUT_SECTION).\
               replace('{see: helpdoc.WORKLOAD_SECTION}', WORKLOAD_SECTION).\
               replace('{see: helpdoc.CONFIG_SECTION}', CONFIG_SECTION).\
               replace('{see: helpdoc.HELP_SECTION}', HELP_SECTION)


def get_short_help_from_long(val: str) -> str:
    """ Drops the long descriptions of options, keeping everything else.

        Rules:
        1. An options section starts with a line holding "Options:" and ends
           with a blank line.
        2. Inside a section, a line starting with a dash (after indentation)
           starts an option.  Its first description line is kept.
        3. Further description lines of an option are removed.
    """
    results = []
    option_section = False
    description_lines = 0

    for line in val.split('\n'):
        stripped = line.strip()
        if 'Options:' in line[:30]:
            option_section = True
            description_lines = 0
            results.append(line)
            continue
        if option_section and not stripped:
            option_section = False
        if option_section:
            if stripped.startswith('-'):
                description_lines = 0 if len(line) < 24 or not line[23:].strip() else 1
                results.append(line.rstrip())
                continue
            description_lines += 1
            if description_lines > 1:
                continue
        results.append(line.rstrip())
    return '\n'.join(results)
