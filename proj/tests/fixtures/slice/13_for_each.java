public List<Object> all(List<String> docs) {
    List<Object> out = new ArrayList<>();
    for (String doc : fetchAll(docs)) {
        Object o = xstream.fromXML(doc);
        out.add(o);
    }
    return out;
}
