#!/usr/bin/env python

import os
from setuptools import setup, find_packages

def read(*paths):
    with open(os.path.join(*paths), 'r') as f:
        return f.read()

VERSION = read('stackpdn/_version.py').split('=')[1].strip()[1:-1]
REQUIREMENTS = read('requirements.txt')
DESCRIPTION = 'TSV power delivery network IR-drop, electromigration and lifetime analysis for 3D-stacked DRAM banks'

assert VERSION.count('.') == 2

setup(name='stackpdn',
      version=VERSION,
      description=DESCRIPTION,
      long_description=(read('README.rst') + '\n\n' + read('CHANGELOG.rst')),
      keywords="pdn ir-drop tsv electromigration dram 3d-stacking",
      author='Ken Farmer',
      author_email='kenfar@gmail.com',
      license='BSD',
      classifiers=['Development Status :: 3 - Alpha',
                   'Environment :: Console',
                   'Intended Audience :: Science/Research',
                   'License :: OSI Approved :: BSD License',
                   'Programming Language :: Python',
                   'Operating System :: POSIX',
                   'Topic :: Scientific/Engineering',
                   'Topic :: Scientific/Engineering :: Electronic Design Automation (EDA)'],
      scripts=['scripts/stackpdn_age',
               'scripts/stackpdn_compare',
               'scripts/stackpdn_headroom',
               'scripts/stackpdn_irmap',
               'scripts/stackpdn_layout',
               'scripts/stackpdn_lifetime',
               'scripts/stackpdn_napsaa',
               'scripts/stackpdn_netlist',
               'scripts/stackpdn_perf',
               'scripts/stackpdn_rw'],
      install_requires=REQUIREMENTS,
      packages=find_packages(),
      package_data={'stackpdn': ['profiles/*.cfg',
                                 'profiles/*.csv',
                                 'profiles/workloads/*.cfg']},
     )
