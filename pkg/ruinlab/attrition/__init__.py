from importlib.metadata import version, PackageNotFoundError
try:
    __version__ = version("ruinlab-attrition")
except PackageNotFoundError:
    pass
