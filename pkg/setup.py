from setuptools import setup, find_packages

setup(
    name="projected-cooling",
    version="0.1.0",
    description="Simulate projected cooling and adiabatic evolution of localized lattice states",
    author="Janos Velenyak",
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.9",
        "python-dotenv>=1.0.0",
        "click>=8.0.0",
    ],
    extras_require={
        "dev": ["pytest>=7.0"],
    },
    entry_points={
        "console_scripts": [
            "pcool=projected_cooling.cli:cli",
        ],
    },
    python_requires=">=3.8",
)
