import setuptools

setuptools.setup(
    name='writerid',
    version='1.0.0',
    description='Writer identification from handwritten word images',
    license='MIT',
    packages=setuptools.find_packages(exclude=('tests*',)),
    install_requires=[
        # pinned versions in requirements.txt
        'Flask', 'Werkzeug', 'Flask-WTF', 'WTForms', 'Flask-Executor', 'click',
        'numpy', 'scipy', 'pandas', 'scikit-learn', 'Pillow',
    ],
    package_data={'writerid': [
        'logging.conf'
    ]},
    entry_points={'console_scripts': [
        'writerid=writerid:main',
    ]},
    python_requires='>=3.9',
    zip_safe=False,
)
