from setuptools import find_packages, setup

setup(
    name='rieszlab',
    version='0.1.0',
    packages=find_packages(exclude=['tests']),
    description='Numerical certificates and simulations for sampled-data control of Riesz-spectral systems',
    install_requires=[
        'numpy>=1.20',
        'scipy>=1.7'
    ],
    extras_require={
        'test': [
            'pytest>=7.0'
        ]
    },
    entry_points={
        'console_scripts': [
            'rieszlab=rieszlab.contrib.pipeline.cli:main'
        ]
    },
    classifiers=[
        'Programming Language :: Python :: 3.8',
        'Operating System :: OS Independent'
    ]
)
