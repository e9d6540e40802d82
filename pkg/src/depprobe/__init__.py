"""Linear probing toolkit for dependency trees and transfer prediction."""

__version__ = "0.1.0"
