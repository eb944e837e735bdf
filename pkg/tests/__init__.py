# Test module for rabi-lab
