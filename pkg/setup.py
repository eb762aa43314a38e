import pathlib

from setuptools import setup, find_packages


# The directory containing this file
HERE = pathlib.Path(__file__).parent

# The text of the README file
README = (HERE / "README.md").read_text()


setup(
    description='Box-Cox prefiltering with maximum likelihood lambda estimation for pixel segmentation',
    long_description=README,
    long_description_content_type="text/markdown",
    version='0.3.0',
    install_requires=['numpy>=1.22', 'scipy>=1.8', 'Pillow>=9.1'],
    tests_require=['pytest', 'pytest-cov', 'tox', 'hypothesis'],
    license="MIT",
    classifiers=[
            "License :: OSI Approved :: MIT License",
            "Programming Language :: Python :: 3",
            "Programming Language :: Python :: 3.9",
        ],
    packages=find_packages(exclude=("test", "test.*")),
    name='boxcoxseg',
    python_requires='>=3.9',
    package_data={
            'boxcoxseg': ['configs/*']
        },
    entry_points={
        'console_scripts': [
                'boxcox-seg = boxcoxseg.__main__:main'
            ]
    }
)
