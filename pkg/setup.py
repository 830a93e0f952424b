from setuptools import setup


setup(
    name='mkdv_lab',
    version='0.1.0',
    packages=['mkdv_lab', 'mkdv_lab.core', 'mkdv_lab.experiments'],
    license='',
    description='CLI laboratory for the complex mKdV family on the torus: pseudo-spectral solver, gauges, '
                'norms and reproducible experiments.',
    python_requires='>=3.10',
    install_requires=['numpy>=1.24', 'scipy>=1.10', 'pydantic>=2.0'],
    extras_require={'test': ['pytest>=7.0']},
)
