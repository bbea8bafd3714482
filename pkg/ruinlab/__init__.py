# coding: utf-8
#
# ruinlab __init__.py
#

__path__ = __import__('pkgutil').extend_path(__path__, __name__)
