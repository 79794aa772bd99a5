from setuptools import find_packages, setup

setup(
    name="crlab",
    packages=find_packages(exclude=["tests"]),
    version="0.1.0",
    description="Information-theoretic disentanglement of causal and non-causal treatment features.",
    author="AmpiroKichik",
    license="",
    python_requires=">=3.9",
    install_requires=[
        "torch",
        "numpy",
        "scipy",
        "pandas",
        "pydantic>=2",
        "tqdm",
    ],
    extras_require={
        "tracking": ["accelerate", "wandb"],
        "test": ["pytest", "hypothesis"],
    },
    entry_points={"console_scripts": ["crlab=crlab.scripts.cli:main"]},
)
