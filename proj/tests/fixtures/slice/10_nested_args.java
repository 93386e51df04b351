public Object nested(String base) {
    String path = join(base, suffix());
    String enc = encoding(path);
    Object r = xstream.fromXML(decode(read(path), enc));
    return r;
}
