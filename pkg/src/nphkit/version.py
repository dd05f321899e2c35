"""Single source for the package version string."""

PACKAGE_VERSION = "0.1.0"
