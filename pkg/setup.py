from setuptools import setup

setup(
    name="bvs",
    version="0.1",
    description=(
        "Bayesian variable selection and model averaging for binary "
        "outcomes."),
    license="GPLv3",
    install_requires=["numpy", "scipy", "pandas", "Sphinx", "linotype"],
    tests_require=["pytest", "pyfakefs"],
    python_requires=">=3.7",
    packages=[
        "bvs", "bvs.commands"
        ],
    data_files=[
        ("share/bvs", ["docs/config/settings.conf"])
        ],
    entry_points={
        "console_scripts": ["bvs=bvs.cli:main"]
        }
    )
