import sys
from setuptools import setup

install_require = ['numpy>=1.17']

if sys.version_info.major < 3:
    print('Python 2 is not supported')
    sys.exit(1)
elif sys.version_info.major > 2 and \
                sys.version_info.minor < 5:
    print('Python 3.5 or newer is required')
    sys.exit(1)

setup(name='ToolCL',
      version='0.1.0',
      packages=['toolcl',
                'toolcl.cl',
                'toolcl.data',
                'toolcl.model',
                'toolcl.tasks',
                'toolcl.tools'],
      entry_points={
          'console_scripts': ['toolcl=toolcl.main:main']},
      install_requires=install_require,
      test_suite='tests',
      license='GNU GPLv3',
      description='Continual learning of tool use with small language models')
