# Check reports, task runners and charts module
