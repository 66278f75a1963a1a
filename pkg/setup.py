from setuptools import setup, find_packages

setup(
    name="calibration-workbench",
    version="0.1.0",
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "click>=8.0.0",
        "pyyaml>=6.0",
        "rich>=13.0.0",
        "numpy>=1.24.0",
        "scipy>=1.10.0",
    ],
    entry_points={
        "console_scripts": [
            "calib-workbench=calibration_workbench.cli:main",
        ],
    },
)
