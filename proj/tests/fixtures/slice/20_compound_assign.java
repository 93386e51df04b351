public void limit(Limiter lim, List<String> items) {
    int count = 0;
    count += size(items);
    lim.check(count);
}
