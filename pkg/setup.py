#
# setup.py
#

from setuptools import setup, find_packages
import os

PACKAGE = 'ruinlab'

here = os.path.abspath(os.path.dirname(__file__))

setup(
    name='{}-attrition'.format(PACKAGE),
    include_package_data=True,
    version=open(os.path.join(here, 'VERSION')).read().strip(),
    description='{} exact ruin probabilities and scaling-limit experiments for the war of ruins'.format(PACKAGE),
    zip_safe=False,
    packages=find_packages(exclude=['examples', 'examples.*']),
    package_data={'ruinlab.attrition': ['config/*.json']},
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.17',
        'scipy>=1.4',
        'pandas>=1.5',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': [
            ("{pkg} = "
             "{pkg}.attrition.pipeline.experiment_pipeline:main"
             .format(pkg=PACKAGE)),
        ],
    },
)
