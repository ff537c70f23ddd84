for (int i = 0; i < n; i++) {
  Hexad_run(i);
}
