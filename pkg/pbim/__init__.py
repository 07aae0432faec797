# Patch-selected biologically inspired model (PBIM) feature toolkit
__version__ = "1.0.0"
