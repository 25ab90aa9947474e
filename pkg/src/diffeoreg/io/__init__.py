"""Artifact I/O: text sections, CSV frames, matrices and vectors."""
import logging

logger = logging.getLogger(__name__)
